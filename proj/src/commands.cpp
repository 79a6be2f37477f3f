#include "uvjitter/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "uvjitter/error.hpp"

namespace uvjitter::commands {

namespace fs = std::filesystem;
using scenario::Scenario;

namespace {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12e", v);
    return buf;
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    return out;
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
}

// Minimal line chart; log_y drops non-positive points.
void write_svg(const fs::path& path, const std::string& title, const std::string& xlabel,
               const std::string& ylabel, const std::vector<Series>& series, bool log_y)
{
    constexpr double W = 720, H = 460, L = 80, R = 180, T = 40, B = 60;
    static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

    auto ty = [&](double y) { return log_y ? std::log10(y) : y; };
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i]) || (log_y && s.y[i] <= 0.0)) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    if (!(x1 > x0)) x1 = x0 + 1.0;
    if (!(y1 > y0)) y1 = y0 + 1.0;
    if (log_y) {
        y0 = std::floor(y0);
        y1 = std::ceil(y1);
    }
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (ty(y) - y0) / (y1 - y0) * (H - T - B); };

    auto out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << title
        << "</text>\n"
        << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\""
        << H - T - B << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4;
        out << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">"
            << num(xv).substr(0, 4) << num(xv).substr(num(xv).find('e')) << "</text>\n";
    }
    const int yticks = log_y ? static_cast<int>(y1 - y0) : 4;
    for (int i = 0; i <= yticks; ++i) {
        const double yv = y0 + (y1 - y0) * i / std::max(yticks, 1);
        const double ypix = H - B - (yv - y0) / (y1 - y0) * (H - T - B);
        const std::string text = log_y ? "1e" + std::to_string(static_cast<int>(std::lround(yv)))
                                       : num(yv).substr(0, 4) + num(yv).substr(num(yv).find('e'));
        out << "<text x=\"" << L - 6 << "\" y=\"" << ypix + 4 << "\" text-anchor=\"end\">" << text
            << "</text>\n";
    }
    out << "<text x=\"" << (W - R + L) / 2 << "\" y=\"" << H - 16 << "\" text-anchor=\"middle\">"
        << xlabel << "</text>\n"
        << "<text x=\"18\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << H / 2 << ")\">" << ylabel << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* colour = colours[k % 5];
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i]) || (log_y && s.y[i] <= 0.0)) continue;
            out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        }
        out << "\"/>\n";
        const double ly = T + 16 + 18.0 * k;
        out << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 36
            << "\" y2=\"" << ly << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n"
            << "<text x=\"" << W - R + 42 << "\" y=\"" << ly + 4 << "\">" << s.label << "</text>\n";
    }
    out << "</svg>\n";
}

struct Analytic {
    jitter::QuadraticModel model;
    quadform::PowerDensity density;
};

Analytic analyse(const channel::LinkGeometry& g, const channel::ChannelParams& p,
                 const jitter::JitterSpec& spec, int q)
{
    auto model = jitter::expand_ftpd(jitter::fold_means(g, spec), p);
    auto density = quadform::PowerDensity::build(quadform::decompose(model, spec), q);
    return {model, std::move(density)};
}

struct BerPoint {
    counting::BerResult jittered;
    counting::BerResult clean;
    montecarlo::BerEstimate mc;
    int warnings = 0;
};

BerPoint ber_point(const Scenario& s, const channel::LinkGeometry& g, const jitter::JitterSpec& spec,
                   std::uint64_t seed)
{
    const auto p = s.channel_params();
    const auto d = s.detector_params();
    const double lb = d.background_mean();
    const auto a = analyse(g, p, spec, s.jitter.q);

    BerPoint r;
    r.clean = counting::ber_no_jitter(counting::lambda_s(a.model.f0, d), lb, s.priors());
    r.jittered = counting::ber_jitter(a.density, d, lb, s.priors());
    r.warnings = a.density.quadrature_warnings();

    auto cfg = s.mc;
    cfg.seed = seed;
    r.mc = montecarlo::mc_ber(a.model, spec, d, lb, r.jittered.threshold, cfg, s.priors());
    return r;
}

scenario::SweepSection axis_or(const Scenario& s, const std::string& variable,
                               scenario::SweepSection fallback)
{
    return s.sweep.variable == variable ? s.sweep : fallback;
}

} // namespace

std::uint64_t point_seed(std::uint64_t base, std::size_t i)
{
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(i) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void cmd_pdf(const Scenario& s, const fs::path& out_dir, std::ostream& log)
{
    s.validate();
    ensure_dir(out_dir);
    const auto g = s.link_geometry();
    const auto p = s.channel_params();
    const auto d = s.detector_params();
    const auto spec = s.jitter_spec();
    const auto a = analyse(g, p, spec, s.jitter.q);
    if (a.density.point_mass())
        throw InputError("pdf: jitter standard deviations are all zero; the received power is "
                         "deterministic at " + num(a.density.location()) + " W");

    const auto range = a.density.support();
    const auto exact = montecarlo::mc_power(g, p, spec, s.mc, montecarlo::PowerPath::exact, range);
    const auto ftpd = montecarlo::mc_power(g, p, spec, s.mc, montecarlo::PowerPath::ftpd, range);
    auto pdf = [&](double e) { return a.density.pdf(e); };

    {
        auto out = open_out(out_dir / "pdf.csv");
        out << "e_r_w,f_analytic,hist_exact,hist_ftpd\n";
        Series fa{"analytic", {}, {}}, he{"MC exact", {}, {}}, hf{"MC FTPD", {}, {}};
        for (int i = 0; i < exact.bins(); ++i) {
            const double e = 0.5 * (exact.edges[i] + exact.edges[i + 1]);
            const double f = pdf(e);
            out << num(e) << ',' << num(f) << ',' << num(exact.density[i]) << ','
                << num(ftpd.density[i]) << '\n';
            for (auto* sr : {&fa, &he, &hf}) sr->x.push_back(e);
            fa.y.push_back(f);
            he.y.push_back(exact.density[i]);
            hf.y.push_back(ftpd.density[i]);
        }
        write_svg(out_dir / "pdf.svg", "PDF of received power", "E_r (W)", "density (1/W)",
                  {fa, hf, he}, false);
    }

    const double lb = d.background_mean();
    const double ls0 = counting::lambda_s(a.model.f0, d);
    const double ls_max = std::max(ls0, counting::lambda_s(range.second, d));
    const int k_max = counting::count_cutoff(ls_max + lb);
    const auto cdf_j = counting::cdf_jitter_table(a.density, d, lb, k_max);
    {
        auto out = open_out(out_dir / "cdf.csv");
        out << "k,cdf_jitter,cdf_nojitter\n";
        for (int k = 0; k <= k_max; ++k)
            out << k << ',' << num(cdf_j[k]) << ',' << num(counting::cdf_poisson(k, ls0 + lb)) << '\n';
    }

    log << "f0 = " << num(a.model.f0) << " W, eps = " << num(a.model.eps) << " W\n"
        << "support = [" << num(range.first) << ", " << num(range.second) << "] W, mass = "
        << num(a.density.total_mass()) << '\n'
        << "L1(analytic, MC FTPD) = " << num(montecarlo::l1_distance(ftpd, pdf)) << '\n'
        << "L1(analytic, MC exact) = " << num(montecarlo::l1_distance(exact, pdf)) << " ("
        << exact.zeroed << " samples scored as zero power)\n";
    if (a.density.quadrature_warnings() > 0)
        log << "warning: " << a.density.quadrature_warnings()
            << " quadratures stopped at the subdivision limit\n";
}

void cmd_ber_sigma(const Scenario& s, const fs::path& out_dir, std::ostream& log)
{
    s.validate();
    ensure_dir(out_dir);
    const auto axis = axis_or(s, "sigma", scenario::SweepSection{});
    const auto g = s.link_geometry();

    auto out = open_out(out_dir / "ber_sigma.csv");
    out << "sigma_rad,ber_analytic,ber_mc,ci_lo,ci_hi,n_th\n";
    Series an{"analytic", {}, {}}, mc{"MC", {}, {}};
    for (int i = 0; i < axis.steps; ++i) {
        const double sigma = axis.value(i);
        auto spec = s.jitter_spec();
        spec.sd = {sigma, sigma, sigma, sigma};
        const auto r = ber_point(s, g, spec, point_seed(s.mc.seed, i));
        const auto& best = sigma == 0.0 ? r.clean : r.jittered;
        out << num(sigma) << ',' << num(best.error_probability) << ',' << num(r.mc.ber) << ','
            << num(r.mc.ci.lo) << ',' << num(r.mc.ci.hi) << ',' << best.threshold << '\n';
        out.flush();
        an.x.push_back(sigma);
        an.y.push_back(best.error_probability);
        mc.x.push_back(sigma);
        mc.y.push_back(r.mc.ber);
        log << "sigma = " << sigma << " rad: P = " << num(best.error_probability) << ", MC = "
            << num(r.mc.ber) << " [" << num(r.mc.ci.lo) << ", " << num(r.mc.ci.hi)
            << "], n_th = " << best.threshold << '\n';
        if (r.warnings > 0) log << "  warning: " << r.warnings << " quadratures hit the subdivision limit\n";
    }
    write_svg(out_dir / "ber_sigma.svg", "BER vs jitter standard deviation", "sigma (rad)", "BER",
              {an, mc}, true);
}

void cmd_ber_range(const Scenario& s, const fs::path& out_dir, std::ostream& log)
{
    s.validate();
    ensure_dir(out_dir);
    scenario::SweepSection fallback;
    fallback.variable = "range_m";
    fallback.lo = 30.0;
    fallback.hi = 170.0;
    const auto axis = axis_or(s, "range_m", fallback);
    const auto spec = s.jitter_spec();

    auto out = open_out(out_dir / "ber_range.csv");
    out << "range_m,ber_jitter,ber_nojitter,ber_mc,ci_lo,ci_hi\n";
    Series bj{"jitter", {}, {}}, bn{"no jitter", {}, {}}, mc{"MC", {}, {}};
    for (int i = 0; i < axis.steps; ++i) {
        auto g = s.link_geometry();
        g.range_m = axis.value(i);
        BerPoint r;
        try {
            r = ber_point(s, g, spec, point_seed(s.mc.seed, i));
        } catch (const Error& e) {
            throw InputError("range_m = " + num(g.range_m) + ": " + e.what());
        }
        out << num(g.range_m) << ',' << num(r.jittered.error_probability) << ','
            << num(r.clean.error_probability) << ',' << num(r.mc.ber) << ',' << num(r.mc.ci.lo)
            << ',' << num(r.mc.ci.hi) << '\n';
        out.flush();
        for (auto* sr : {&bj, &bn, &mc}) sr->x.push_back(g.range_m);
        bj.y.push_back(r.jittered.error_probability);
        bn.y.push_back(r.clean.error_probability);
        mc.y.push_back(r.mc.ber);
        log << "r = " << g.range_m << " m: P_j = " << num(r.jittered.error_probability)
            << ", P = " << num(r.clean.error_probability) << ", MC = " << num(r.mc.ber) << '\n';
    }
    write_svg(out_dir / "ber_range.svg", "BER vs range", "range (m)", "BER", {bj, bn, mc}, true);
}

std::vector<CheckResult> run_checks(const Scenario& s)
{
    using numerics::Vec4;
    std::vector<CheckResult> results;
    auto check = [&](const std::string& name, const std::function<std::pair<bool, std::string>()>& f) {
        try {
            auto [ok, detail] = f();
            results.push_back({name, ok, detail});
        } catch (const std::exception& e) {
            results.push_back({name, false, std::string("threw: ") + e.what()});
        }
    };
    auto fmt = [](double v) { return num(v); };

    const auto g = s.link_geometry();
    const auto p = s.channel_params();
    const auto d = s.detector_params();
    const double lb = d.background_mean();

    check("scenario round-trip", [&] {
        std::istringstream in(scenario::serialize(s));
        return std::pair{scenario::parse_scenario(in) == s, std::string()};
    });

    check("axis vectors unit norm", [&] {
        const auto ax = channel::axis_vectors(g);
        const double e = std::max(std::abs(norm(ax.tx_axis) - 1.0), std::abs(norm(ax.rx_axis) - 1.0));
        return std::pair{e < 1e-14, "max deviation " + fmt(e)};
    });

    check("phase function integrates to 1", [&] {
        const auto r = numerics::integrate_adaptive(
            [&](double mu) { return 2.0 * std::numbers::pi * channel::phase_function(mu, p); }, -1.0, 1.0,
            {1e-12, 1e-300, 2000});
        return std::pair{std::abs(r.value - 1.0) < 1e-6, "integral " + fmt(r.value)};
    });

    check("azimuthal mirror symmetry", [&] {
        auto a = g, b = g;
        a.azim_tx = 0.1;
        b.azim_tx = -0.1;
        a.azim_rx = b.azim_rx = 0.0;
        const double ea = channel::received_power(a, p), eb = channel::received_power(b, p);
        const double rel = std::abs(ea - eb) / std::max(std::abs(ea), 1e-300);
        return std::pair{rel < 1e-12, "relative difference " + fmt(rel)};
    });

    const auto model = jitter::expand_ftpd(g, p);

    check("square completion identity", [&] {
        numerics::Rng rng(s.mc.seed);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            Vec4 a{};
            for (auto& x : a) x = numerics::sample_gaussian(0.0, 0.05, rng);
            const double lhs = model.expanded(a), rhs = model.shifted(a);
            worst = std::max(worst, std::abs(lhs - rhs) / std::abs(model.f0));
        }
        return std::pair{worst < 1e-10, "max relative residual " + fmt(worst)};
    });

    check("shift constant expansion", [&] {
        const auto& G = model.hessian_half;
        const auto& c = model.shift;
        double e = 0.0;
        for (int i = 0; i < 4; ++i) {
            e += c[i] * c[i] * G(i, i);
            for (int j = i + 1; j < 4; ++j) e += 2.0 * c[i] * c[j] * G(i, j);
        }
        e = -e;
        const double rel = std::abs(e - model.e) / std::max(std::abs(model.e), 1e-300);
        return std::pair{rel < 1e-12, "relative difference " + fmt(rel)};
    });

    for (double sigma : {0.02, 0.04, 0.07}) {
        const auto spec = jitter::JitterSpec::isotropic(sigma);
        const auto density = quadform::PowerDensity::build(quadform::decompose(model, spec), s.jitter.q);
        char tag_buf[32];
        std::snprintf(tag_buf, sizeof tag_buf, " (sigma %.2f)", sigma);
        const std::string tag = tag_buf;

        check("pdf integrates to 1" + tag, [&] {
            const double m = density.total_mass();
            return std::pair{std::abs(m - 1.0) < 1e-3, "mass " + fmt(m)};
        });

        check("count pmf sums to 1" + tag, [&] {
            const int n_max = counting::count_cutoff(counting::lambda_s(density.support().second, d) + lb);
            const auto pmf = counting::pmf_jitter_table(density, d, lb, n_max);
            double sum = 0.0;
            for (double v : pmf) sum += v;
            return std::pair{std::abs(sum - 1.0) < 1e-3, "sum " + fmt(sum)};
        });

        check("count cdf monotone and bounded" + tag, [&] {
            const auto cdf = counting::cdf_jitter_table(density, d, lb, 40);
            bool ok = true;
            for (std::size_t k = 0; k < cdf.size(); ++k) {
                ok = ok && cdf[k] >= -1e-12 && cdf[k] <= 1.0 + 1e-3;
                if (k > 0) ok = ok && cdf[k] >= cdf[k - 1] - 1e-12;
            }
            return std::pair{ok, "k = 0..40"};
        });

        check("jittered BER in [0, 0.5] and optimal" + tag, [&] {
            const auto r = counting::ber_jitter(density, d, lb, s.priors());
            bool ok = r.error_probability >= 0.0 && r.error_probability <= 0.5;
            for (auto k : {r.threshold - 1, r.threshold + 1})
                if (k >= 0) ok = ok && counting::ber_jitter_at(k, density, d, lb, s.priors()) >= r.error_probability;
            return std::pair{ok, "P = " + fmt(r.error_probability) + ", n_th = " + std::to_string(r.threshold)};
        });
    }

    check("degenerate jitter limit", [&] {
        const auto spec = jitter::JitterSpec::isotropic(1e-6);
        const auto density = quadform::PowerDensity::build(quadform::decompose(model, spec), s.jitter.q);
        const double pj = counting::ber_jitter(density, d, lb, s.priors()).error_probability;
        const double p0 = counting::ber_no_jitter(counting::lambda_s(model.f0, d), lb, s.priors()).error_probability;
        return std::pair{std::abs(pj - p0) < 1e-6, "|P_j - P| = " + fmt(std::abs(pj - p0))};
    });

    check("BER nonincreasing in signal", [&] {
        double prev = 0.5;
        bool ok = true;
        for (double ls = 0.0; ls <= 60.0; ls += 0.5) {
            const double v = counting::ber_no_jitter(ls, lb).error_probability;
            ok = ok && v <= prev + 1e-15;
            prev = v;
        }
        return std::pair{ok, "lambda_s = 0..60"};
    });

    check("MC determinism across workers", [&] {
        auto cfg = s.mc;
        cfg.n_samples = 20000;
        cfg.workers = 1;
        const auto spec = jitter::JitterSpec::isotropic(0.04);
        const auto a = montecarlo::sample_powers(g, p, spec, cfg, montecarlo::PowerPath::exact);
        cfg.workers = 3;
        const auto b = montecarlo::sample_powers(g, p, spec, cfg, montecarlo::PowerPath::exact);
        return std::pair{a.values == b.values, std::string("20000 samples, 1 vs 3 workers")};
    });

    check("histogram normalization", [&] {
        auto cfg = s.mc;
        cfg.n_samples = 20000;
        const auto h = montecarlo::mc_power(g, p, jitter::JitterSpec::isotropic(0.04), cfg,
                                            montecarlo::PowerPath::ftpd);
        return std::pair{std::abs(h.mass() - 1.0) < 1e-12, "mass " + fmt(h.mass())};
    });

    check("Wilson interval coverage", [&] {
        numerics::Rng rng(s.mc.seed ^ 0x5bd1e995);
        const double prob = 0.03;
        int covered = 0;
        for (int run = 0; run < 100; ++run) {
            std::int64_t k = 0;
            for (int i = 0; i < 2000; ++i) k += rng.uniform() < prob;
            const auto ci = montecarlo::wilson_interval(k, 2000);
            covered += ci.lo <= prob && prob <= ci.hi;
        }
        return std::pair{covered >= 93, std::to_string(covered) + "/100 intervals cover p"};
    });

    return results;
}

bool cmd_validate(const Scenario& s, std::ostream& out)
{
    const auto results = run_checks(s);
    std::size_t width = 0;
    for (const auto& r : results) width = std::max(width, r.name.size());
    bool all = true;
    for (const auto& r : results) {
        all = all && r.passed;
        out << (r.passed ? "PASS  " : "FAIL  ") << r.name << std::string(width - r.name.size() + 2, ' ')
            << r.detail << '\n';
    }
    out << (all ? "all checks passed" : "some checks FAILED") << '\n';
    return all;
}

} // namespace uvjitter::commands
