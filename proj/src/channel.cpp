#include "uvjitter/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "uvjitter/error.hpp"

namespace uvjitter::channel {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool ok, const char* field, const char* rule)
{
    if (!ok) throw DomainError(std::string(field) + " must satisfy " + rule);
}

} // namespace

double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

void LinkGeometry::validate() const
{
    require(range_m > 0.0 && std::isfinite(range_m), "range", "r > 0");
    require(elev_tx > 0.0 && elev_tx < kPi / 2, "theta_T (transmitter elevation)", "0 < theta_T < pi/2");
    require(elev_rx > 0.0 && elev_rx < kPi / 2, "theta_R (receiver elevation)", "0 < theta_R < pi/2");
    require(azim_tx > -kPi && azim_tx <= kPi, "phi_T (transmitter azimuth)", "-pi < phi_T <= pi");
    require(azim_rx > -kPi && azim_rx <= kPi, "phi_R (receiver azimuth)", "-pi < phi_R <= pi");
    require(half_beam_tx > 0.0 && half_beam_tx < kPi / 2, "alpha_T (half beam angle)", "0 < alpha_T < pi/2");
    require(half_fov_rx > 0.0 && half_fov_rx < kPi / 2, "alpha_R (half FOV angle)", "0 < alpha_R < pi/2");
}

void ChannelParams::validate() const
{
    if (!(k_rayleigh >= 0.0 && k_mie >= 0.0 && k_absorption >= 0.0))
        throw InputError("channel coefficients must be >= 0");
    if (!(std::abs(g) < 1.0)) throw InputError("Mie asymmetry g must satisfy |g| < 1");
    if (!(f >= 0.0 && f <= 1.0)) throw InputError("Mie parameter f must lie in [0, 1]");
    if (!(aperture_cm2 > 0.0)) throw InputError("aperture area must be > 0");
    if (!(pulse_energy_w >= 0.0)) throw InputError("pulse energy must be >= 0");
}

AxisVectors axis_vectors(const LinkGeometry& g)
{
    const double ct = std::cos(g.elev_tx), cr = std::cos(g.elev_rx);
    return {
        {ct * std::cos(g.azim_tx), ct * std::sin(g.azim_tx), std::sin(g.elev_tx)},
        {-cr * std::cos(g.azim_rx), cr * std::sin(g.azim_rx), std::sin(g.elev_rx)},
        {g.range_m, 0.0, 0.0},
    };
}

CommonVolume common_volume(const LinkGeometry& g, ChordPolicy policy)
{
    const auto [t, rhat, r0] = axis_vectors(g);
    CommonVolume cv;

    // Points s*t inside the cone satisfy u(s) = (s t - R0).rhat >= 0 and
    // u^2 >= cos^2(alpha_R) |s t - R0|^2, i.e. A s^2 + 2 B s + C >= 0.
    const double a = dot(t, rhat);
    const double b = dot(r0, rhat);
    const double c = dot(t, r0);
    const double cos2 = std::cos(g.half_fov_rx) * std::cos(g.half_fov_rx);
    const double qa = a * a - cos2;
    const double qb = -a * b + cos2 * c;
    const double qc = b * b - cos2 * dot(r0, r0);

    // qa >= 0: the beam axis direction lies inside the double cone and the
    // chord is unbounded (or absent); treated as no common volume.
    if (!(qa < 0.0)) return cv;
    const double disc = qb * qb - qa * qc;
    if (!(disc > 0.0)) return cv;

    const double q = -(qb + std::copysign(std::sqrt(disc), qb));
    double s1 = q / qa;
    double s2 = (q != 0.0) ? qc / q : -s1;
    if (s1 > s2) std::swap(s1, s2);

    // Discard the chord when it lies on the mirror nappe.
    const double mid = 0.5 * (s1 + s2);
    if (mid * a - b < 0.0) return cv;

    if (s2 <= 0.0) return cv;
    if (policy == ChordPolicy::forward_only && s1 < 0.0) s1 = 0.0;
    if (!(s2 > s1)) return cv;

    const double s_cell = 0.5 * (s1 + s2);
    const Vec3 cell = s_cell * t;
    const Vec3 to_rx = r0 - cell;
    const double rp = norm(to_rx);
    if (!(rp > 0.0)) return cv;

    cv.r_a = s1;
    cv.r_b = s2;
    cv.r_prime = rp;
    cv.scatter_angle = std::acos(std::clamp(dot(t, to_rx) / rp, -1.0, 1.0));
    cv.arrival_angle = std::acos(std::clamp(-dot(rhat, to_rx) / rp, -1.0, 1.0));
    cv.empty = false;
    return cv;
}

double phase_function(double mu, const ChannelParams& p)
{
    if (!(std::abs(mu) <= 1.0)) throw InputError("phase_function: |cos(theta_s)| must be <= 1");

    const double gm = p.gamma;
    const double rayleigh =
        3.0 * (1.0 + 3.0 * gm + (1.0 - gm) * mu * mu) / (16.0 * kPi * (1.0 + 2.0 * gm));

    const double g = p.g;
    const double g2 = g * g;
    const double mie = (1.0 - g2) / (4.0 * kPi) *
                       (std::pow(1.0 + g2 - 2.0 * g * mu, -1.5) +
                        p.f * (3.0 * mu * mu - 1.0) / (2.0 * std::pow(1.0 + g2, 1.5)));

    const double ks = p.k_rayleigh + p.k_mie;
    if (ks == 0.0) return 1.0 / (4.0 * kPi);
    return (p.k_rayleigh * rayleigh + p.k_mie * mie) / ks;
}

double received_power(const LinkGeometry& g, const ChannelParams& p)
{
    return received_power(g, p, common_volume(g, p.chord));
}

double received_power(const LinkGeometry& g, const ChannelParams& p, const CommonVolume& cv)
{
    if (cv.empty) return 0.0;

    // Single unit-conversion point: lengths to km, aperture to km^2.
    const double ra = cv.r_a * 1e-3;
    const double rb = cv.r_b * 1e-3;
    const double rp = cv.r_prime * 1e-3;
    const double area = p.aperture_cm2 * 1e-10;

    const double ke = p.extinction();
    const double solid_angle = 2.0 * kPi * (1.0 - std::cos(g.half_beam_tx));

    // (exp(-ke ra) - exp(-ke rb)) / ke, finite as ke -> 0
    double chord = rb - ra;
    if (ke * (rb - ra) > 1e-300)
        chord = std::exp(-ke * ra) * -std::expm1(-ke * (rb - ra)) / ke;

    double scale = 1.0;
    if (p.normalization == ScatteringNormalization::cited_model)
        scale = 4.0 * kPi * p.scattering();

    const double phase = phase_function(std::cos(cv.scatter_angle), p);
    const double power = scale * p.pulse_energy_w * area * g.half_beam_tx * g.half_beam_tx *
                         phase * std::cos(cv.arrival_angle) /
                         (4.0 * solid_angle * rp * rp * std::exp(ke * rp)) * chord;
    return std::max(power, 0.0);
}

} // namespace uvjitter::channel
