#include "uvjitter/quadform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/log1p.hpp>

#include "uvjitter/error.hpp"

namespace uvjitter::quadform {

namespace {

using numerics::Mat4;
using numerics::Vec4;

constexpr double kHugeExponent = 700.0;

double log_envelope_drop() { return -std::log(kEnvelopeFloor); }

// Smallest y > peak with A ln(peak / y) + (y - peak) >= drop.
double upper_envelope_point(double a, double drop)
{
    const double peak = std::max(a, 0.0);
    auto gap = [&](double y) {
        return (peak > 0.0 ? a * std::log(peak / y) : 0.0) + (y - peak);
    };
    double lo = peak, hi = peak + drop + 1.0;
    while (gap(hi) < drop) hi = peak + 2.0 * (hi - peak);
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) < drop ? lo : hi) = mid;
    }
    return hi;
}

// Largest y < peak (peak = a > 0) with the same envelope drop; 0 if a <= 0.
double lower_envelope_point(double a, double drop)
{
    if (a <= 0.0) return 0.0;
    auto gap = [&](double log_y) {
        const double y = std::exp(log_y);
        return a * (std::log(a) - log_y) + (y - a);
    };
    double lo = std::log(a) - kHugeExponent, hi = std::log(a);
    if (gap(lo) < drop) return 0.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) < drop ? hi : lo) = mid;
    }
    return std::exp(lo);
}

std::vector<long double> moments_from_cumulants_ld(std::span<const long double> kappa)
{
    const std::size_t s = kappa.size();
    std::vector<long double> mu(s + 1, 0.0L);
    mu[0] = 1.0L;
    for (std::size_t n = 1; n <= s; ++n) {
        long double binom = 1.0L; // C(n-1, i)
        long double acc = 0.0L;
        for (std::size_t i = 0; i < n; ++i) {
            acc += binom * kappa[n - i - 1] * mu[i];
            binom = binom * static_cast<long double>(n - 1 - i) / static_cast<long double>(i + 1);
        }
        mu[n] = acc;
    }
    return mu;
}

// Fit in the standardized variable y = x / scale; mu[s] = E[Y^s], s = 0..q.
GammaSeries fit_standardized(double shape, double scale, std::span<const long double> mu)
{
    const int q = static_cast<int>(mu.size()) - 1;
    if (q < 2) throw InputError("gamma series needs order q >= 2");
    if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale))
        throw InputError("gamma series: moments do not define a positive gamma base");

    const long double a = static_cast<long double>(shape) - 1.0L;

    // Power-basis coefficients of L_k^(a)(y), k = 0..q.
    std::vector<std::vector<long double>> poly(q + 1);
    poly[0] = {1.0L};
    poly[1] = {1.0L + a, -1.0L};
    for (int k = 1; k < q; ++k) {
        std::vector<long double> next(k + 2, 0.0L);
        for (int j = 0; j <= k; ++j) {
            next[j] += (2.0L * k + 1.0L + a) * poly[k][j];
            next[j + 1] -= poly[k][j];
        }
        for (int j = 0; j < k; ++j) next[j] -= (k + a) * poly[k - 1][j];
        for (auto& v : next) v /= static_cast<long double>(k + 1);
        poly[k + 1] = std::move(next);
    }

    // Orthogonality: int w L_k^2 = Gamma(shape + k) / (Gamma(shape) k!).
    std::vector<long double> norm_sq(q + 1, 1.0L);
    for (int k = 1; k <= q; ++k)
        norm_sq[k] = norm_sq[k - 1] * (static_cast<long double>(shape) + k - 1) / k;

    std::vector<long double> expectation(q + 1, 0.0L);
    std::vector<double> cond(q + 1, 1.0);
    for (int k = 0; k <= q; ++k) {
        long double acc = 0.0L, mag = 0.0L;
        for (int j = 0; j <= k; ++j) {
            acc += poly[k][j] * mu[j];
            mag += std::abs(poly[k][j]) * mu[j];
        }
        expectation[k] = acc;
        cond[k] = static_cast<double>(mag / std::sqrt(norm_sq[k]));
    }

    int order = 2;
    double worst = std::max(cond[1], cond[2]);
    for (int k = 3; k <= q; ++k) {
        if (!(cond[k] <= kMaxSeriesCondition)) break;
        order = k;
        worst = std::max(worst, cond[k]);
    }

    GammaSeries s;
    s.shape = shape;
    s.scale = scale;
    s.order = order;
    s.requested_order = q;
    s.condition = worst;
    s.laguerre.assign(order + 1, 0.0);
    s.laguerre[0] = 1.0;
    // k = 1, 2 vanish by the choice of shape and scale.
    for (int k = 3; k <= order; ++k)
        s.laguerre[k] = static_cast<double>(expectation[k] / norm_sq[k]);

    std::vector<long double> m(order + 1, 0.0L);
    for (int k = 0; k <= order; ++k)
        for (int j = 0; j <= k; ++j) m[j] += static_cast<long double>(s.laguerre[k]) * poly[k][j];
    s.coeffs.assign(m.begin(), m.end());

    const double drop = log_envelope_drop();
    s.lower = scale * lower_envelope_point(shape - 1.0, drop);
    s.upper = scale * upper_envelope_point(shape - 1.0 + order, drop);
    return s;
}

} // namespace

// ---------------------------------------------------------------------------

double SpectralForm::mean() const
{
    double m = location();
    for (const auto& t : pos) m += t.weight * (1.0 + t.noncentrality);
    for (const auto& t : neg) m -= t.weight * (1.0 + t.noncentrality);
    return m;
}

double SpectralForm::variance() const
{
    double v = 0.0;
    for (const auto& t : pos) v += 2.0 * t.weight * t.weight * (1.0 + 2.0 * t.noncentrality);
    for (const auto& t : neg) v += 2.0 * t.weight * t.weight * (1.0 + 2.0 * t.noncentrality);
    return v;
}

SpectralForm decompose(const jitter::QuadraticModel& model, const jitter::JitterSpec& spec)
{
    spec.validate();
    return decompose(model.hessian_half, model.shift, model.eps, spec.sd);
}

SpectralForm decompose(const numerics::SymMatrix4& g, const Vec4& shift, double eps, const Vec4& sd)
{
    for (double s : sd)
        if (!(s >= 0.0)) throw InputError("decompose: standard deviations must be >= 0");

    // E_r - eps = z^T M z + 2 b^T z + c0 with z standard normal,
    // M = S G S, b = S G mu, c0 = mu^T G mu, mu = -shift.
    const Mat4& gm = g.matrix();
    Mat4 m{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m[i][j] = sd[i] * gm[i][j] * sd[j];

    Vec4 mu{};
    for (int i = 0; i < 4; ++i) mu[i] = -shift[i];
    const Vec4 g_mu = numerics::mat_vec(gm, mu);
    Vec4 b{};
    for (int i = 0; i < 4; ++i) b[i] = sd[i] * g_mu[i];
    const double c0 = numerics::dot(mu, g_mu);

    const auto eig = numerics::jacobi_eigen(numerics::SymMatrix4(m));
    double largest = 0.0;
    for (double v : eig.values) largest = std::max(largest, std::abs(v));

    SpectralForm form;
    form.eps = eps;
    double offset = c0;
    for (int k = 0; k < 4; ++k) {
        const double lambda = eig.values[k];
        double bt = 0.0;
        for (int i = 0; i < 4; ++i) bt += eig.vectors[i][k] * b[i];

        if (largest == 0.0 || std::abs(lambda) <= kEigenDropTolerance * largest) {
            offset += lambda;
            form.dropped_variance += 4.0 * bt * bt + 2.0 * lambda * lambda;
            continue;
        }
        const double centre = bt / lambda;
        offset -= lambda * centre * centre;
        const SpectralTerm term{std::abs(lambda), centre * centre};
        (lambda > 0.0 ? form.pos : form.neg).push_back(term);
    }
    form.dropped_mean = offset;
    return form;
}

double cumulant(std::span<const SpectralTerm> part, int s)
{
    if (s < 1) throw InputError("cumulant order must be >= 1");
    double factor = std::ldexp(1.0, s - 1);
    for (int i = 2; i < s; ++i) factor *= i;
    double sum = 0.0;
    for (const auto& t : part) sum += std::pow(t.weight, s) * (1.0 + s * t.noncentrality);
    return factor * sum;
}

std::vector<double> moments_from_cumulants(std::span<const double> kappa)
{
    std::vector<long double> k(kappa.begin(), kappa.end());
    const auto mu = moments_from_cumulants_ld(k);
    return {mu.begin(), mu.end()};
}

GammaSeries fit_gamma_series(std::span<const SpectralTerm> part, int q)
{
    if (part.empty()) throw InputError("fit_gamma_series: empty chi-square combination");
    if (q < 2) throw InputError("fit_gamma_series: order q must be >= 2");
    for (const auto& t : part)
        if (!(t.weight > 0.0) || !(t.noncentrality >= 0.0))
            throw InputError("fit_gamma_series: weights must be > 0 and noncentralities >= 0");

    const double k1 = cumulant(part, 1);
    const double k2 = cumulant(part, 2);
    const double scale = k2 / k1;
    const double shape = k1 / scale;

    // Cumulants of Y = X / scale.
    std::vector<long double> kappa(q);
    for (int s = 1; s <= q; ++s) {
        long double factor = std::ldexp(1.0L, s - 1);
        for (int i = 2; i < s; ++i) factor *= i;
        long double sum = 0.0L;
        for (const auto& t : part) {
            const long double w = static_cast<long double>(t.weight) / scale;
            sum += std::pow(w, s) * (1.0L + s * static_cast<long double>(t.noncentrality));
        }
        kappa[s - 1] = factor * sum;
    }
    const auto mu = moments_from_cumulants_ld(kappa);
    return fit_standardized(shape, scale, mu);
}

GammaSeries fit_gamma_series_moments(std::span<const double> raw)
{
    if (raw.size() < 3) throw InputError("fit_gamma_series_moments: need moments up to order 2");
    const double mean = raw[1] / raw[0];
    const double var = raw[2] / raw[0] - mean * mean;
    if (!(mean > 0.0) || !(var > 0.0))
        throw InputError("fit_gamma_series_moments: moments must describe a positive variable");
    const double scale = var / mean;
    const double shape = mean / scale;
    std::vector<long double> mu(raw.size());
    long double p = 1.0L;
    for (std::size_t s = 0; s < raw.size(); ++s) {
        mu[s] = static_cast<long double>(raw[s]) / raw[0] / p;
        p *= scale;
    }
    return fit_standardized(shape, scale, mu);
}

namespace {

// log of y^(a-1) e^(-y) / Gamma(a). For large a the direct form cancels
// catastrophically; with y = (a-1)(1+d) it equals
//   -(a-1)(d - log1p(d)) - log(2 pi (a-1)) / 2 - stirling(a-1).
double log_gamma_kernel(double shape, double y)
{
    const double a = shape - 1.0;
    if (a < 100.0) return a * std::log(y) - y - std::lgamma(shape);
    const double d = y / a - 1.0;
    const double inv = 1.0 / a, inv2 = inv * inv;
    const double stirling = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0));
    return a * boost::math::log1pmx(d) - 0.5 * std::log(2.0 * std::numbers::pi * a) - stirling;
}

} // namespace

double GammaSeries::density(double x) const
{
    if (x < 0.0 || std::isnan(x)) return 0.0;
    const double y = x / scale;
    const double a = shape - 1.0;

    double poly = laguerre[0];
    if (order >= 1) {
        double prev = 1.0, cur = 1.0 + a - y;
        poly += laguerre[1] * cur;
        for (int k = 1; k < order; ++k) {
            const double next = ((2.0 * k + 1.0 + a - y) * cur - (k + a) * prev) / (k + 1);
            prev = cur;
            cur = next;
            poly += laguerre[k + 1] * cur;
        }
    }

    if (y == 0.0) {
        if (shape < 1.0) return std::numeric_limits<double>::infinity();
        if (shape > 1.0) return 0.0;
        return poly / scale;
    }
    return std::exp(log_gamma_kernel(shape, y)) * poly / scale;
}

double GammaSeries::physical_coeff(int i) const
{
    return coeffs.at(i) / std::pow(scale, i);
}

// ---------------------------------------------------------------------------

PowerDensity PowerDensity::build(const SpectralForm& form, int q,
                                 const numerics::QuadratureSpec& quadrature)
{
    PowerDensity d;
    d.location_ = form.location();
    d.mean_ = form.mean();
    d.variance_ = form.variance();
    d.quadrature_ = quadrature;
    if (!form.pos.empty()) d.pos_ = fit_gamma_series(form.pos, q);
    if (!form.neg.empty()) d.neg_ = fit_gamma_series(form.neg, q);

    double lo = 0.0, hi = 0.0;
    if (d.pos_ && d.neg_) {
        lo = d.pos_->lower - d.neg_->upper;
        hi = d.pos_->upper - d.neg_->lower;
    } else if (d.pos_) {
        lo = d.pos_->lower;
        hi = d.pos_->upper;
    } else if (d.neg_) {
        lo = -d.neg_->upper;
        hi = -d.neg_->lower;
    }
    d.support_ = {d.location_ + lo, d.location_ + hi};
    return d;
}

void PowerDensity::note(bool converged) const
{
    if (!converged) warnings_->fetch_add(1, std::memory_order_relaxed);
}

double PowerDensity::convolve(double x) const
{
    if (point_mass()) throw InputError("point-mass power distribution has no density");
    if (!neg_) return pos_->density(x);
    if (!pos_) return neg_->density(-x);

    const GammaSeries& g1 = *pos_;
    const GammaSeries& g2 = *neg_;
    // y ranges over the support of g2 with x + y inside the support of g1.
    const double ylo = std::max({g2.lower, g1.lower - x, 0.0});
    const double yhi = std::min(g2.upper, g1.upper - x);
    if (!(yhi > ylo)) return 0.0;

    // Integrable endpoint singularities when a shape parameter is below 1.
    double exponent = 0.0;
    if (ylo == 0.0 && g2.shape < 1.0) exponent += g2.shape - 1.0;
    if (x + ylo <= 0.0 && g1.shape < 1.0) exponent += g1.shape - 1.0;
    const double power = exponent < 0.0 ? std::min(2.0 / std::max(1.0 + exponent, 1e-3), 64.0) : 1.0;
    const double width = yhi - ylo;

    auto integrand = [&](double t) {
        const double tp = std::pow(t, power);
        const double y = ylo + width * tp;
        const double jac = power == 1.0 ? width : width * power * tp / t;
        if (!(jac > 0.0) || !std::isfinite(jac)) return 0.0;
        const double v = g1.density(x + y) * g2.density(y) * jac;
        return std::isfinite(v) ? v : 0.0;
    };

    numerics::QuadratureSpec spec = quadrature_;
    spec.abs_floor = std::max(spec.abs_floor, 1e-13 / std::sqrt(variance_));
    spec.max_subdivisions = std::min(spec.max_subdivisions, 400);
    std::array<double, 9> bp{};
    for (int i = 0; i < 9; ++i) bp[i] = i / 8.0;
    const auto r = numerics::integrate_adaptive(integrand, bp, spec);
    note(r.converged);
    return r.value;
}

double PowerDensity::h1(double x) const
{
    if (x < 0.0) throw InputError("h1 is defined for x >= 0");
    return convolve(x);
}

double PowerDensity::h2(double x) const
{
    if (x > 0.0) throw InputError("h2 is defined for x <= 0");
    return convolve(x);
}

double PowerDensity::raw_density(double e_r) const
{
    const double x = e_r - location_;
    return x > 0.0 ? h1(x) : h2(x);
}

double PowerDensity::pdf(double e_r) const
{
    if (e_r < support_.first || e_r > support_.second) return 0.0;
    return std::max(raw_density(e_r), 0.0);
}

std::vector<double> PowerDensity::breakpoints(int panels) const
{
    const auto [lo, hi] = support_;
    std::vector<double> bp;
    bp.reserve(panels + 2);
    for (int i = 0; i <= panels; ++i) bp.push_back(lo + (hi - lo) * i / panels);
    bp.back() = hi;
    if (location_ > lo && location_ < hi) bp.push_back(location_);
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    return bp;
}

double PowerDensity::cdf(double e_r) const
{
    if (point_mass()) return e_r < location_ ? 0.0 : 1.0;
    const auto [lo, hi] = support_;
    if (e_r <= lo) return 0.0;
    const double top = std::min(e_r, hi);

    std::vector<double> bp;
    for (double b : breakpoints())
        if (b < top) bp.push_back(b);
    bp.push_back(top);
    const auto r = numerics::integrate_adaptive([&](double e) { return pdf(e); }, bp, quadrature_);
    note(r.converged);
    return r.value;
}

numerics::VectorQuadratureResult PowerDensity::expect(const numerics::VectorIntegrand& f,
                                                      std::size_t n) const
{
    if (point_mass()) {
        numerics::VectorQuadratureResult r;
        r.values.assign(n, 0.0);
        r.errors.assign(n, 0.0);
        f(location_, r.values);
        return r;
    }
    auto weighted = [&](double e, std::span<double> out) {
        const double w = pdf(e);
        if (w == 0.0) {
            std::fill(out.begin(), out.end(), 0.0);
            return;
        }
        f(e, out);
        for (auto& v : out) v *= w;
    };
    const auto bp = breakpoints();
    auto r = numerics::integrate_adaptive_vector(weighted, n, bp, quadrature_);
    note(r.converged);
    return r;
}

double PowerDensity::total_mass() const
{
    if (point_mass()) return 1.0;
    const auto r = expect([](double, std::span<double> out) { out[0] = 1.0; }, 1);
    return r.values[0];
}

double sample_power(const jitter::QuadraticModel& model, const jitter::JitterSpec& spec,
                    numerics::Rng& rng)
{
    Vec4 alpha{};
    for (int i = 0; i < 4; ++i) alpha[i] = numerics::sample_gaussian(0.0, spec.sd[i], rng);
    return model.shifted(alpha);
}

} // namespace uvjitter::quadform
