#pragma once

// Deterministic single-scattering NLOS link: geometry, phase function and
// closed-form received power.

#include <array>

namespace uvjitter::channel {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(Vec3 a);

/// Transceiver configuration. Angles in radians, range in meters.
struct LinkGeometry {
    double range_m = 50.0;
    double elev_tx = 0.0; ///< theta_T
    double elev_rx = 0.0; ///< theta_R
    double azim_tx = 0.0; ///< phi_T
    double azim_rx = 0.0; ///< phi_R
    double half_beam_tx = 0.0; ///< alpha_T
    double half_fov_rx = 0.0;  ///< alpha_R

    /// Throws DomainError naming the first field outside its valid range.
    void validate() const;
};

/// How the received-power formula normalizes single scattering.
enum class ScatteringNormalization {
    /// Scattering coefficient k_r + k_m and the 4*pi phase-function
    /// convention of the closed-form model are applied; E_r is in watts.
    cited_model,
    /// The bare expression without the scattering coefficient (W*km).
    as_typeset,
};

/// Which part of the beam-axis line counts as the common-volume chord.
enum class ChordPolicy {
    /// Both analytic roots of the FOV-cone quadratic; the entry point may
    /// lie behind the transmitter. Smooth in all four pointing angles.
    analytic,
    /// Entry point clamped to s >= 0 (forward propagation only).
    forward_only,
};

struct ChannelParams {
    double k_rayleigh = 0.266;   ///< km^-1
    double k_mie = 0.284;        ///< km^-1
    double k_absorption = 0.802; ///< km^-1
    double gamma = 0.017;        ///< Rayleigh depolarization parameter
    double g = 0.72;             ///< Mie asymmetry
    double f = 0.5;              ///< Mie backscatter weight
    double aperture_cm2 = 1.77;
    double pulse_energy_w = 0.1; ///< E_t, 2 * P_t for OOK
    ScatteringNormalization normalization = ScatteringNormalization::cited_model;
    ChordPolicy chord = ChordPolicy::analytic;

    double extinction() const { return k_rayleigh + k_mie + k_absorption; }
    double scattering() const { return k_rayleigh + k_mie; }
    void validate() const;
};

struct AxisVectors {
    Vec3 tx_axis;     ///< unit beam axis, transmitter at the origin
    Vec3 rx_axis;     ///< unit FOV axis
    Vec3 rx_position; ///< (r, 0, 0)
};

AxisVectors axis_vectors(const LinkGeometry& g);

/// Beam-axis chord through the receiver FOV cone and the representative
/// scattering cell at its midpoint. Lengths in meters, angles in radians.
struct CommonVolume {
    double r_a = 0.0;
    double r_b = 0.0;
    double r_prime = 0.0;
    double scatter_angle = 0.0; ///< theta_s
    double arrival_angle = 0.0; ///< zeta, off-axis angle at the receiver
    bool empty = true;
};

CommonVolume common_volume(const LinkGeometry& g, ChordPolicy policy = ChordPolicy::analytic);

/// Rayleigh + generalized Henyey-Greenstein mixture, sr^-1, normalized to
/// unit integral over the sphere.
double phase_function(double cos_theta, const ChannelParams& p);

/// Received power (W) of one pulse. Zero when the common volume is empty.
double received_power(const LinkGeometry& g, const ChannelParams& p);

/// Same, from an already computed common volume.
double received_power(const LinkGeometry& g, const ChannelParams& p, const CommonVolume& cv);

} // namespace uvjitter::channel
