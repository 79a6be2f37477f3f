#pragma once

#include <numbers>

#include "uvjitter/channel.hpp"
#include "uvjitter/counting.hpp"

namespace testing_support {

constexpr double kDeg = std::numbers::pi / 180.0;

// (theta_T, theta_R, phi_T, phi_R) in degrees; alpha = (1, 30) degrees.
inline uvjitter::channel::LinkGeometry geometry(double theta_t, double theta_r, double phi_t,
                                                double phi_r, double range_m = 50.0)
{
    uvjitter::channel::LinkGeometry g;
    g.range_m = range_m;
    g.elev_tx = theta_t * kDeg;
    g.elev_rx = theta_r * kDeg;
    g.azim_tx = phi_t * kDeg;
    g.azim_rx = phi_r * kDeg;
    g.half_beam_tx = 1.0 * kDeg;
    g.half_fov_rx = 30.0 * kDeg;
    return g;
}

inline uvjitter::channel::LinkGeometry baseline() { return geometry(20, 20, 5, 0); }

inline uvjitter::counting::DetectorParams detector(double kbps)
{
    uvjitter::counting::DetectorParams d;
    d.pulse_s = 1.0 / (kbps * 1e3);
    return d;
}

} // namespace testing_support
