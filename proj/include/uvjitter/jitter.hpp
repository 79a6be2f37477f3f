#pragma once

// Second-order (FTPD) model of the received power in the four jitter
// angles, completed into a shifted quadratic form.

#include <functional>

#include "uvjitter/channel.hpp"
#include "uvjitter/numerics.hpp"

namespace uvjitter::jitter {

using numerics::SymMatrix4;
using numerics::Vec4;

/// Jitter offsets are ordered (theta_Tj, theta_Rj, phi_Tj, phi_Rj) everywhere.
struct JitterSpec {
    Vec4 mean{}; ///< rad
    Vec4 sd{};   ///< rad

    static JitterSpec isotropic(double sigma) { return {{}, {sigma, sigma, sigma, sigma}}; }
    void validate() const;
};

/// E_r(alpha) ~= f0 + grad.alpha + alpha G alpha^T
///            = (alpha - shift) G (alpha - shift)^T + eps
struct QuadraticModel {
    double f0 = 0.0;
    Vec4 grad{};
    SymMatrix4 hessian_half; ///< G: half the Hessian of E_r (W/rad^2)
    Vec4 shift{};            ///< (a, b, c, d)
    double e = 0.0;
    double eps = 0.0; ///< f0 + e

    double expanded(const Vec4& alpha) const;
    double shifted(const Vec4& alpha) const;
};

/// Geometry with every angle moved by the given offsets (azimuths wrapped
/// into (-pi, pi]). Throws DomainError naming the offending angle.
channel::LinkGeometry perturb(const channel::LinkGeometry& g, const Vec4& alpha);

double perturbed_power(const channel::LinkGeometry& g, const channel::ChannelParams& p,
                       const Vec4& alpha);

/// Base geometry with the jitter means folded in.
channel::LinkGeometry fold_means(const channel::LinkGeometry& g, const JitterSpec& spec);

constexpr double kDefaultStep = 1e-4;

struct Derivatives {
    double f0 = 0.0;
    Vec4 grad{};
    SymMatrix4 hessian_half;
};

/// Central differences at h and 2h combined by one Richardson step.
Derivatives finite_differences(const std::function<double(const Vec4&)>& f,
                               double step = kDefaultStep);

/// Expansion of the received power about alpha = 0. Throws
/// NonSmoothPointError when a stencil point has no common volume or an
/// invalid geometry.
QuadraticModel expand_ftpd(const channel::LinkGeometry& g, const channel::ChannelParams& p,
                           double step = kDefaultStep);

/// Shift stage: G shift = -grad/2, e = -shift^T G shift. Throws
/// DegenerateFormError when G is singular.
QuadraticModel complete_square(double f0, const Vec4& grad, const SymMatrix4& g);

} // namespace uvjitter::jitter
