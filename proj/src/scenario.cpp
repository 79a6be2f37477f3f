#include "uvjitter/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "uvjitter/error.hpp"

namespace uvjitter::scenario {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& v)
{
    double x = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) throw InputError("expected a number, got '" + v + "'");
    return x;
}

template <class Int>
Int to_int(const std::string& v)
{
    Int x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) throw InputError("expected an integer, got '" + v + "'");
    return x;
}

const char* name(channel::ScatteringNormalization n)
{
    return n == channel::ScatteringNormalization::cited_model ? "cited_model" : "as_typeset";
}

const char* name(channel::ChordPolicy c)
{
    return c == channel::ChordPolicy::analytic ? "analytic" : "forward_only";
}

using Setter = std::function<void(Scenario&, const std::string&)>;
using Getter = std::function<std::string(const Scenario&)>;

struct Key {
    Setter set;
    Getter get; ///< empty for write-only shorthands
};

std::string fmt(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

template <class T>
Key real(T Scenario::*section, double T::*field)
{
    return {[=](Scenario& s, const std::string& v) { s.*section.*field = to_double(v); },
            [=](const Scenario& s) { return fmt(s.*section.*field); }};
}

Key vec_entry(numerics::Vec4 JitterSection::*field, int i)
{
    return {[=](Scenario& s, const std::string& v) { (s.jitter.*field)[i] = to_double(v); },
            [=](const Scenario& s) { return fmt((s.jitter.*field)[i]); }};
}

/// Ordered by section so serialize() emits a readable file.
const std::vector<std::pair<std::string, std::vector<std::pair<std::string, Key>>>>& schema()
{
    static const auto table = [] {
        std::vector<std::pair<std::string, std::vector<std::pair<std::string, Key>>>> t;
        t.push_back({"geometry",
                     {{"range_m", real(&Scenario::geometry, &GeometrySection::range_m)},
                      {"theta_t", real(&Scenario::geometry, &GeometrySection::theta_t_deg)},
                      {"theta_r", real(&Scenario::geometry, &GeometrySection::theta_r_deg)},
                      {"phi_t", real(&Scenario::geometry, &GeometrySection::phi_t_deg)},
                      {"phi_r", real(&Scenario::geometry, &GeometrySection::phi_r_deg)},
                      {"alpha_t", real(&Scenario::geometry, &GeometrySection::alpha_t_deg)},
                      {"alpha_r", real(&Scenario::geometry, &GeometrySection::alpha_r_deg)},
                      {"theta",
                       {[](Scenario& s, const std::string& v) {
                            s.geometry.theta_t_deg = s.geometry.theta_r_deg = to_double(v);
                        },
                        {}}}}});
        t.push_back(
            {"channel",
             {{"k_r", real(&Scenario::channel, &ChannelSection::k_r)},
              {"k_m", real(&Scenario::channel, &ChannelSection::k_m)},
              {"k_a", real(&Scenario::channel, &ChannelSection::k_a)},
              {"gamma", real(&Scenario::channel, &ChannelSection::gamma)},
              {"g", real(&Scenario::channel, &ChannelSection::g)},
              {"f", real(&Scenario::channel, &ChannelSection::f)},
              {"aperture_cm2", real(&Scenario::channel, &ChannelSection::aperture_cm2)},
              {"power_mw", real(&Scenario::channel, &ChannelSection::power_mw)},
              {"normalization",
               {[](Scenario& s, const std::string& v) {
                    if (v == "cited_model")
                        s.channel.normalization = channel::ScatteringNormalization::cited_model;
                    else if (v == "as_typeset")
                        s.channel.normalization = channel::ScatteringNormalization::as_typeset;
                    else
                        throw InputError("expected cited_model or as_typeset, got '" + v + "'");
                },
                [](const Scenario& s) { return std::string(name(s.channel.normalization)); }}},
              {"chord",
               {[](Scenario& s, const std::string& v) {
                    if (v == "analytic")
                        s.channel.chord = channel::ChordPolicy::analytic;
                    else if (v == "forward_only")
                        s.channel.chord = channel::ChordPolicy::forward_only;
                    else
                        throw InputError("expected analytic or forward_only, got '" + v + "'");
                },
                [](const Scenario& s) { return std::string(name(s.channel.chord)); }}}}});
        t.push_back({"detector",
                     {{"eta_f", real(&Scenario::detector, &DetectorSection::eta_f)},
                      {"eta_p", real(&Scenario::detector, &DetectorSection::eta_p)},
                      {"wavelength_nm", real(&Scenario::detector, &DetectorSection::wavelength_nm)},
                      {"data_rate_kbps", real(&Scenario::detector, &DetectorSection::data_rate_kbps)},
                      {"background_cps", real(&Scenario::detector, &DetectorSection::background_cps)},
                      {"p_one", real(&Scenario::detector, &DetectorSection::p_one)}}});
        t.push_back({"jitter",
                     {{"sigma_theta_t", vec_entry(&JitterSection::sigma_rad, 0)},
                      {"sigma_theta_r", vec_entry(&JitterSection::sigma_rad, 1)},
                      {"sigma_phi_t", vec_entry(&JitterSection::sigma_rad, 2)},
                      {"sigma_phi_r", vec_entry(&JitterSection::sigma_rad, 3)},
                      {"mean_theta_t", vec_entry(&JitterSection::mean_deg, 0)},
                      {"mean_theta_r", vec_entry(&JitterSection::mean_deg, 1)},
                      {"mean_phi_t", vec_entry(&JitterSection::mean_deg, 2)},
                      {"mean_phi_r", vec_entry(&JitterSection::mean_deg, 3)},
                      {"q",
                       {[](Scenario& s, const std::string& v) { s.jitter.q = to_int<int>(v); },
                        [](const Scenario& s) { return std::to_string(s.jitter.q); }}},
                      {"sigma_all",
                       {[](Scenario& s, const std::string& v) {
                            const double x = to_double(v);
                            s.jitter.sigma_rad = {x, x, x, x};
                        },
                        {}}}}});
        t.push_back(
            {"mc",
             {{"seed",
               {[](Scenario& s, const std::string& v) { s.mc.seed = to_int<std::uint64_t>(v); },
                [](const Scenario& s) { return std::to_string(s.mc.seed); }}},
              {"n_samples",
               {[](Scenario& s, const std::string& v) { s.mc.n_samples = to_int<std::int64_t>(v); },
                [](const Scenario& s) { return std::to_string(s.mc.n_samples); }}},
              {"n_symbols",
               {[](Scenario& s, const std::string& v) { s.mc.n_symbols = to_int<std::int64_t>(v); },
                [](const Scenario& s) { return std::to_string(s.mc.n_symbols); }}},
              {"bins",
               {[](Scenario& s, const std::string& v) { s.mc.bins = to_int<int>(v); },
                [](const Scenario& s) { return std::to_string(s.mc.bins); }}},
              {"workers",
               {[](Scenario& s, const std::string& v) { s.mc.workers = to_int<int>(v); },
                [](const Scenario& s) { return std::to_string(s.mc.workers); }}}}});
        t.push_back({"sweep",
                     {{"variable",
                       {[](Scenario& s, const std::string& v) { s.sweep.variable = v; },
                        [](const Scenario& s) { return s.sweep.variable; }}},
                      {"lo", real(&Scenario::sweep, &SweepSection::lo)},
                      {"hi", real(&Scenario::sweep, &SweepSection::hi)},
                      {"steps",
                       {[](Scenario& s, const std::string& v) { s.sweep.steps = to_int<int>(v); },
                        [](const Scenario& s) { return std::to_string(s.sweep.steps); }}}}});
        return t;
    }();
    return table;
}

const Key* find_key(const std::string& section, const std::string& key)
{
    for (const auto& [sec, keys] : schema()) {
        if (sec != section) continue;
        for (const auto& [k, entry] : keys)
            if (k == key) return &entry;
    }
    return nullptr;
}

bool known_section(const std::string& section)
{
    for (const auto& [sec, keys] : schema())
        if (sec == section) return true;
    return false;
}

void require(bool ok, const std::string& key, const std::string& what)
{
    if (!ok) throw InputError(key + " " + what);
}

} // namespace

bool Scenario::operator==(const Scenario& o) const
{
    return geometry == o.geometry && channel == o.channel && detector == o.detector &&
           jitter == o.jitter && mc.seed == o.mc.seed && mc.n_samples == o.mc.n_samples &&
           mc.n_symbols == o.mc.n_symbols && mc.bins == o.mc.bins && mc.workers == o.mc.workers &&
           sweep == o.sweep;
}

void Scenario::validate() const
{
    const auto& gm = geometry;
    require(gm.range_m > 0.0, "geometry.range_m", "must be > 0");
    require(gm.theta_t_deg > 0.0 && gm.theta_t_deg < 90.0, "geometry.theta_t", "must lie in (0, 90) degrees");
    require(gm.theta_r_deg > 0.0 && gm.theta_r_deg < 90.0, "geometry.theta_r", "must lie in (0, 90) degrees");
    require(gm.phi_t_deg > -180.0 && gm.phi_t_deg <= 180.0, "geometry.phi_t", "must lie in (-180, 180] degrees");
    require(gm.phi_r_deg > -180.0 && gm.phi_r_deg <= 180.0, "geometry.phi_r", "must lie in (-180, 180] degrees");
    require(gm.alpha_t_deg > 0.0 && gm.alpha_t_deg < 90.0, "geometry.alpha_t", "must lie in (0, 90) degrees");
    require(gm.alpha_r_deg > 0.0 && gm.alpha_r_deg < 90.0, "geometry.alpha_r", "must lie in (0, 90) degrees");

    const auto& c = channel;
    require(c.k_r >= 0.0, "channel.k_r", "must be >= 0");
    require(c.k_m >= 0.0, "channel.k_m", "must be >= 0");
    require(c.k_a >= 0.0, "channel.k_a", "must be >= 0");
    require(c.k_r + c.k_m + c.k_a > 0.0, "channel.k_a", "extinction k_r + k_m + k_a must be > 0");
    require(c.gamma >= 0.0, "channel.gamma", "must be >= 0");
    require(c.g > -1.0 && c.g < 1.0, "channel.g", "must lie in (-1, 1)");
    require(c.f >= 0.0 && c.f <= 1.0, "channel.f", "must lie in [0, 1]");
    require(c.aperture_cm2 > 0.0, "channel.aperture_cm2", "must be > 0");
    require(c.power_mw > 0.0, "channel.power_mw", "must be > 0");

    const auto& d = detector;
    require(d.eta_f > 0.0 && d.eta_f <= 1.0, "detector.eta_f", "must lie in (0, 1]");
    require(d.eta_p > 0.0 && d.eta_p <= 1.0, "detector.eta_p", "must lie in (0, 1]");
    require(d.wavelength_nm > 0.0, "detector.wavelength_nm", "must be > 0");
    require(d.data_rate_kbps > 0.0, "detector.data_rate_kbps", "must be > 0");
    require(d.background_cps >= 0.0, "detector.background_cps", "must be >= 0");
    require(d.p_one > 0.0 && d.p_one < 1.0, "detector.p_one", "must lie in (0, 1)");

    static const char* sigma_keys[] = {"jitter.sigma_theta_t", "jitter.sigma_theta_r",
                                       "jitter.sigma_phi_t", "jitter.sigma_phi_r"};
    static const char* mean_keys[] = {"jitter.mean_theta_t", "jitter.mean_theta_r",
                                      "jitter.mean_phi_t", "jitter.mean_phi_r"};
    for (int i = 0; i < 4; ++i) {
        require(jitter.sigma_rad[i] >= 0.0 && std::isfinite(jitter.sigma_rad[i]), sigma_keys[i],
                "must be finite and >= 0");
        require(std::isfinite(jitter.mean_deg[i]), mean_keys[i], "must be finite");
    }
    require(gm.theta_t_deg + jitter.mean_deg[0] > 0.0 && gm.theta_t_deg + jitter.mean_deg[0] < 90.0,
            "jitter.mean_theta_t", "moves theta_t outside (0, 90) degrees");
    require(gm.theta_r_deg + jitter.mean_deg[1] > 0.0 && gm.theta_r_deg + jitter.mean_deg[1] < 90.0,
            "jitter.mean_theta_r", "moves theta_r outside (0, 90) degrees");
    require(jitter.q >= 2 && jitter.q <= 12, "jitter.q", "must lie in [2, 12]");

    require(mc.n_samples > 0, "mc.n_samples", "must be > 0");
    require(mc.n_symbols > 0, "mc.n_symbols", "must be > 0");
    require(mc.bins > 0, "mc.bins", "must be > 0");
    require(mc.workers > 0, "mc.workers", "must be > 0");

    require(sweep.variable == "sigma" || sweep.variable == "range_m", "sweep.variable",
            "must be sigma or range_m, got '" + sweep.variable + "'");
    require(sweep.steps >= 2, "sweep.steps", "must be >= 2");
    require(sweep.hi > sweep.lo, "sweep.hi", "must exceed sweep.lo");
    if (sweep.variable == "sigma") require(sweep.lo >= 0.0, "sweep.lo", "sigma must be >= 0");
    if (sweep.variable == "range_m") require(sweep.lo > 0.0, "sweep.lo", "range must be > 0");
}

channel::LinkGeometry Scenario::link_geometry() const
{
    channel::LinkGeometry g;
    g.range_m = geometry.range_m;
    g.elev_tx = geometry.theta_t_deg * kDeg;
    g.elev_rx = geometry.theta_r_deg * kDeg;
    g.azim_tx = geometry.phi_t_deg * kDeg;
    g.azim_rx = geometry.phi_r_deg * kDeg;
    g.half_beam_tx = geometry.alpha_t_deg * kDeg;
    g.half_fov_rx = geometry.alpha_r_deg * kDeg;
    return g;
}

channel::ChannelParams Scenario::channel_params() const
{
    channel::ChannelParams p;
    p.k_rayleigh = channel.k_r;
    p.k_mie = channel.k_m;
    p.k_absorption = channel.k_a;
    p.gamma = channel.gamma;
    p.g = channel.g;
    p.f = channel.f;
    p.aperture_cm2 = channel.aperture_cm2;
    p.pulse_energy_w = 2.0 * channel.power_mw * 1e-3;
    p.normalization = channel.normalization;
    p.chord = channel.chord;
    return p;
}

counting::DetectorParams Scenario::detector_params() const
{
    counting::DetectorParams d;
    d.eta_filter = detector.eta_f;
    d.eta_detector = detector.eta_p;
    d.wavelength_m = detector.wavelength_nm * 1e-9;
    d.pulse_s = 1.0 / (detector.data_rate_kbps * 1e3);
    d.background_cps = detector.background_cps;
    return d;
}

jitter::JitterSpec Scenario::jitter_spec() const
{
    jitter::JitterSpec j;
    j.sd = jitter.sigma_rad;
    for (int i = 0; i < 4; ++i) j.mean[i] = jitter.mean_deg[i] * kDeg;
    return j;
}

Scenario parse_scenario(std::istream& in, const std::string& origin)
{
    Scenario s;
    std::string section;
    std::string raw;
    int line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw InputError(origin + ":" + std::to_string(line_no) + ": " + msg);
    };

    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(std::string_view(raw).substr(0, raw.find('#')));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail("malformed section header '" + line + "'");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (!known_section(section)) fail("unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected 'key = value', got '" + line + "'");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (section.empty()) fail("key '" + key + "' appears before any section header");
        if (value.empty()) fail("key '" + key + "' has no value");
        const Key* entry = find_key(section, key);
        if (!entry) fail("unknown key '" + key + "' in section [" + section + "]");
        try {
            entry->set(s, value);
        } catch (const InputError& e) {
            fail(section + "." + key + ": " + e.what());
        }
    }
    s.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open scenario file " + path.string());
    return parse_scenario(in, path.string());
}

std::string serialize(const Scenario& s)
{
    std::ostringstream out;
    bool first = true;
    for (const auto& [section, keys] : schema()) {
        if (!first) out << '\n';
        first = false;
        out << '[' << section << "]\n";
        for (const auto& [key, entry] : keys)
            if (entry.get) out << key << " = " << entry.get(s) << '\n';
    }
    return out.str();
}

} // namespace uvjitter::scenario
