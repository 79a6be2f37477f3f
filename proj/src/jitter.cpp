#include "uvjitter/jitter.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "uvjitter/error.hpp"

namespace uvjitter::jitter {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_azimuth(double phi)
{
    double w = std::remainder(phi, 2.0 * kPi);
    if (w <= -kPi) w += 2.0 * kPi;
    return w;
}

} // namespace

void JitterSpec::validate() const
{
    for (int i = 0; i < 4; ++i) {
        if (!(sd[i] >= 0.0) || !std::isfinite(sd[i]))
            throw InputError("jitter standard deviations must be finite and >= 0");
        if (!std::isfinite(mean[i])) throw InputError("jitter means must be finite");
    }
}

double QuadraticModel::expanded(const Vec4& alpha) const
{
    return f0 + numerics::dot(grad, alpha) + hessian_half.quadratic(alpha);
}

double QuadraticModel::shifted(const Vec4& alpha) const
{
    Vec4 beta{};
    for (int i = 0; i < 4; ++i) beta[i] = alpha[i] - shift[i];
    return hessian_half.quadratic(beta) + eps;
}

channel::LinkGeometry perturb(const channel::LinkGeometry& g, const Vec4& alpha)
{
    channel::LinkGeometry out = g;
    out.elev_tx += alpha[0];
    out.elev_rx += alpha[1];
    out.azim_tx = wrap_azimuth(g.azim_tx + alpha[2]);
    out.azim_rx = wrap_azimuth(g.azim_rx + alpha[3]);
    if (!(out.elev_tx > 0.0 && out.elev_tx < kPi / 2))
        throw DomainError("jittered transmitter elevation theta_T + theta_Tj = " +
                          std::to_string(out.elev_tx) + " rad left (0, pi/2)");
    if (!(out.elev_rx > 0.0 && out.elev_rx < kPi / 2))
        throw DomainError("jittered receiver elevation theta_R + theta_Rj = " +
                          std::to_string(out.elev_rx) + " rad left (0, pi/2)");
    return out;
}

double perturbed_power(const channel::LinkGeometry& g, const channel::ChannelParams& p,
                       const Vec4& alpha)
{
    return channel::received_power(perturb(g, alpha), p);
}

channel::LinkGeometry fold_means(const channel::LinkGeometry& g, const JitterSpec& spec)
{
    return perturb(g, spec.mean);
}

Derivatives finite_differences(const std::function<double(const Vec4&)>& f, double h)
{
    const double f0 = f(Vec4{});
    auto at = [&](int i, double di, int j, double dj) {
        Vec4 x{};
        x[i] += di;
        x[j] += dj;
        return f(x);
    };

    auto gradient = [&](double s) {
        Vec4 gr{};
        for (int i = 0; i < 4; ++i) gr[i] = (at(i, s, i, 0.0) - at(i, -s, i, 0.0)) / (2.0 * s);
        return gr;
    };
    auto hessian = [&](double s) {
        numerics::Mat4 hs{};
        for (int i = 0; i < 4; ++i) {
            hs[i][i] = (at(i, s, i, 0.0) - 2.0 * f0 + at(i, -s, i, 0.0)) / (s * s);
            for (int j = i + 1; j < 4; ++j) {
                hs[i][j] = (at(i, s, j, s) - at(i, s, j, -s) - at(i, -s, j, s) + at(i, -s, j, -s)) /
                           (4.0 * s * s);
                hs[j][i] = hs[i][j];
            }
        }
        return hs;
    };

    const Vec4 g1 = gradient(h), g2 = gradient(2.0 * h);
    const numerics::Mat4 h1 = hessian(h), h2 = hessian(2.0 * h);

    Derivatives d;
    d.f0 = f0;
    numerics::Mat4 half{};
    for (int i = 0; i < 4; ++i) {
        d.grad[i] = (4.0 * g1[i] - g2[i]) / 3.0;
        for (int j = 0; j < 4; ++j) half[i][j] = 0.5 * (4.0 * h1[i][j] - h2[i][j]) / 3.0;
    }
    d.hessian_half = SymMatrix4(half);
    return d;
}

QuadraticModel expand_ftpd(const channel::LinkGeometry& g, const channel::ChannelParams& p,
                           double step)
{
    g.validate();
    p.validate();
    auto f = [&](const Vec4& alpha) {
        channel::LinkGeometry moved;
        try {
            moved = perturb(g, alpha);
        } catch (const DomainError& e) {
            throw NonSmoothPointError(std::string("FTPD stencil left the valid geometry: ") + e.what() +
                                      "; move the base geometry away from the boundary");
        }
        const auto cv = channel::common_volume(moved, p.chord);
        if (cv.empty)
            throw NonSmoothPointError("FTPD stencil point has an empty common volume; "
                                      "the received power is not smooth at this geometry");
        return channel::received_power(moved, p, cv);
    };
    const Derivatives d = finite_differences(f, step);
    return complete_square(d.f0, d.grad, d.hessian_half);
}

QuadraticModel complete_square(double f0, const Vec4& grad, const SymMatrix4& g)
{
    Vec4 rhs{};
    for (int i = 0; i < 4; ++i) rhs[i] = -0.5 * grad[i];

    QuadraticModel m;
    m.f0 = f0;
    m.grad = grad;
    m.hessian_half = g;
    try {
        m.shift = numerics::solve4(g.matrix(), rhs);
    } catch (const SingularMatrixError& e) {
        throw DegenerateFormError(
            "second-derivative matrix is singular (det = " + std::to_string(e.determinant()) +
            "); the quadratic jitter model cannot be centered here, perturb the base geometry slightly");
    }
    m.e = -g.quadratic(m.shift);
    m.eps = f0 + m.e;
    return m;
}

} // namespace uvjitter::jitter
