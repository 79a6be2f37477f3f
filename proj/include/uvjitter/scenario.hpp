#pragma once

// Scenario files: flat `key = value` lines under [geometry] [channel]
// [detector] [jitter] [mc] [sweep] headers, `#` comments. Values are kept in
// file units (degrees, m, km^-1, cm^2, mW, nm, kbps) so that a serialized
// scenario reloads identically; the accessors convert to model units.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "uvjitter/channel.hpp"
#include "uvjitter/counting.hpp"
#include "uvjitter/jitter.hpp"
#include "uvjitter/montecarlo.hpp"

namespace uvjitter::scenario {

struct GeometrySection {
    double range_m = 50.0;
    double theta_t_deg = 20.0;
    double theta_r_deg = 20.0;
    double phi_t_deg = 5.0;
    double phi_r_deg = 0.0;
    double alpha_t_deg = 1.0;
    double alpha_r_deg = 30.0;
    bool operator==(const GeometrySection&) const = default;
};

struct ChannelSection {
    double k_r = 0.266; ///< km^-1
    double k_m = 0.284;
    double k_a = 0.802;
    double gamma = 0.017;
    double g = 0.72;
    double f = 0.5;
    double aperture_cm2 = 1.77;
    double power_mw = 50.0; ///< average P_t; pulse energy is 2 P_t
    channel::ScatteringNormalization normalization = channel::ScatteringNormalization::cited_model;
    channel::ChordPolicy chord = channel::ChordPolicy::analytic;
    bool operator==(const ChannelSection&) const = default;
};

struct DetectorSection {
    double eta_f = 0.2;
    double eta_p = 0.3;
    double wavelength_nm = 260.0;
    double data_rate_kbps = 96.0; ///< pulse duration is 1 / data rate
    double background_cps = 14500.0;
    double p_one = 0.5;
    bool operator==(const DetectorSection&) const = default;
};

/// Order: theta_T, theta_R, phi_T, phi_R.
struct JitterSection {
    numerics::Vec4 sigma_rad{0.04, 0.04, 0.04, 0.04};
    numerics::Vec4 mean_deg{};
    int q = quadform::kDefaultSeriesOrder;
    bool operator==(const JitterSection&) const = default;
};

struct SweepSection {
    std::string variable = "sigma"; ///< "sigma" or "range_m"
    double lo = 0.0;
    double hi = 0.07;
    int steps = 15;
    bool operator==(const SweepSection&) const = default;
    double value(int i) const { return lo + (hi - lo) * i / (steps - 1); }
};

struct Scenario {
    GeometrySection geometry;
    ChannelSection channel;
    DetectorSection detector;
    JitterSection jitter;
    montecarlo::McConfig mc;
    SweepSection sweep;

    bool operator==(const Scenario& o) const;

    /// Range checks in file terms; errors name the offending key.
    void validate() const;

    channel::LinkGeometry link_geometry() const;
    channel::ChannelParams channel_params() const;
    counting::DetectorParams detector_params() const;
    counting::Priors priors() const { return {detector.p_one, 1.0 - detector.p_one}; }
    jitter::JitterSpec jitter_spec() const;
};

/// Parses scenario text. Omitted keys keep the defaults above; unknown
/// sections or keys and malformed lines throw InputError with the line number.
Scenario parse_scenario(std::istream& in, const std::string& origin = "<input>");
Scenario load_scenario(const std::filesystem::path& path);

/// Every key, in file units, with round-trip precision.
std::string serialize(const Scenario& s);

} // namespace uvjitter::scenario
