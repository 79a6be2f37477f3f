#include "uvjitter/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "uvjitter/error.hpp"

namespace uvjitter::numerics {

namespace {

bool all_finite(const Mat4& m)
{
    for (const auto& row : m)
        for (double v : row)
            if (!std::isfinite(v)) return false;
    return true;
}

double max_abs(const Mat4& m)
{
    double s = 0.0;
    for (const auto& row : m)
        for (double v : row) s = std::max(s, std::abs(v));
    return s;
}

double frobenius(const Mat4& m)
{
    double s = 0.0;
    for (const auto& row : m)
        for (double v : row) s += v * v;
    return std::sqrt(s);
}

// LU factorization with partial pivoting, in place. Returns the pivot sign
// (+1/-1); the determinant is sign * prod(diag).
int lu_decompose(Mat4& a, std::array<int, 4>& perm)
{
    int sign = 1;
    std::iota(perm.begin(), perm.end(), 0);
    for (int k = 0; k < 4; ++k) {
        int p = k;
        for (int i = k + 1; i < 4; ++i)
            if (std::abs(a[i][k]) > std::abs(a[p][k])) p = i;
        if (p != k) {
            std::swap(a[p], a[k]);
            std::swap(perm[p], perm[k]);
            sign = -sign;
        }
        if (a[k][k] == 0.0) continue;
        for (int i = k + 1; i < 4; ++i) {
            const double factor = a[i][k] / a[k][k];
            a[i][k] = factor;
            for (int j = k + 1; j < 4; ++j) a[i][j] -= factor * a[k][j];
        }
    }
    return sign;
}

} // namespace

SymMatrix4::SymMatrix4(const Mat4& m)
{
    if (!all_finite(m)) throw InputError("SymMatrix4: non-finite entry");
    const double scale = max_abs(m);
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            if (std::abs(m[i][j] - m[j][i]) > 1e-12 * scale)
                throw InputError("SymMatrix4: matrix is not symmetric at (" +
                                 std::to_string(i) + "," + std::to_string(j) + ")");
        }
    }
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m_[i][j] = 0.5 * (m[i][j] + m[j][i]);
}

SymMatrix4 SymMatrix4::diagonal(const Vec4& d)
{
    Mat4 m{};
    for (int i = 0; i < 4; ++i) m[i][i] = d[i];
    return SymMatrix4(m);
}

double SymMatrix4::frobenius_norm() const { return frobenius(m_); }

double SymMatrix4::quadratic(const Vec4& x) const { return dot(x, mat_vec(m_, x)); }

Vec4 mat_vec(const Mat4& a, const Vec4& x)
{
    Vec4 y{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) y[i] += a[i][j] * x[j];
    return y;
}

double dot(const Vec4& a, const Vec4& b)
{
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

EigenDecomp jacobi_eigen(const SymMatrix4& sym)
{
    Mat4 a = sym.matrix();
    Mat4 v{};
    for (int i = 0; i < 4; ++i) v[i][i] = 1.0;

    const double norm = frobenius(a);
    const double target = 1e-14 * norm;

    for (int sweep = 0; sweep < 100 && norm > 0.0; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < 4; ++p)
            for (int q = p + 1; q < 4; ++q) off = std::max(off, std::abs(a[p][q]));
        if (off < target) break;

        for (int p = 0; p < 4; ++p) {
            for (int q = p + 1; q < 4; ++q) {
                if (a[p][q] == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = std::copysign(1.0, theta) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (int k = 0; k < 4; ++k) {
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < 4; ++k) {
                    const double apk = a[p][k];
                    const double aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = a[q][p] = 0.0;

                for (int k = 0; k < 4; ++k) {
                    const double vkp = v[k][p];
                    const double vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::array<int, 4> order{0, 1, 2, 3};
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return a[i][i] > a[j][j]; });

    EigenDecomp out;
    for (int k = 0; k < 4; ++k) {
        out.values[k] = a[order[k]][order[k]];
        for (int i = 0; i < 4; ++i) out.vectors[i][k] = v[i][order[k]];
    }
    return out;
}

double det4(const Mat4& a)
{
    if (!all_finite(a)) throw InputError("det4: non-finite entry");
    Mat4 lu = a;
    std::array<int, 4> perm{};
    double det = lu_decompose(lu, perm);
    for (int i = 0; i < 4; ++i) det *= lu[i][i];
    return det;
}

Vec4 solve4(const Mat4& a, const Vec4& b)
{
    if (!all_finite(a)) throw InputError("solve4: non-finite entry");
    Mat4 lu = a;
    std::array<int, 4> perm{};
    double det = lu_decompose(lu, perm);
    for (int i = 0; i < 4; ++i) det *= lu[i][i];

    const double scale = frobenius(a);
    if (!(std::abs(det) >= 1e-14 * std::pow(scale, 4)) || scale == 0.0)
        throw SingularMatrixError("solve4: matrix is singular to working precision", det);

    Vec4 y{};
    for (int i = 0; i < 4; ++i) {
        double s = b[perm[i]];
        for (int j = 0; j < i; ++j) s -= lu[i][j] * y[j];
        y[i] = s;
    }
    Vec4 x{};
    for (int i = 3; i >= 0; --i) {
        double s = y[i];
        for (int j = i + 1; j < 4; ++j) s -= lu[i][j] * x[j];
        x[i] = s / lu[i][i];
    }
    return x;
}

// ---------------------------------------------------------------------------
// Gauss-Kronrod 7/15

namespace {

constexpr std::array<double, 8> kKronrodNodes{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};

constexpr std::array<double, 8> kKronrodWeights{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the odd Kronrod nodes 1, 3, 5, 7.
constexpr std::array<double, 4> kGaussWeights{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double lo, hi, value, error;
};

Panel gk15(const Integrand& f, double lo, double hi)
{
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double fc = f(center);
    double kronrod = fc * kKronrodWeights[7];
    double gauss = fc * kGaussWeights[3];
    for (int i = 0; i < 7; ++i) {
        const double dx = half * kKronrodNodes[i];
        const double sum = f(center - dx) + f(center + dx);
        kronrod += kKronrodWeights[i] * sum;
        if (i % 2 == 1) gauss += kGaussWeights[i / 2] * sum;
    }
    return {lo, hi, kronrod * half, std::abs((kronrod - gauss) * half)};
}

struct VectorPanel {
    double lo, hi;
    std::vector<double> value, error;
};

VectorPanel gk15_vector(const VectorIntegrand& f, std::size_t n, double lo, double hi,
                        std::vector<double>& scratch)
{
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    VectorPanel p{lo, hi, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    std::vector<double> gauss(n, 0.0);
    scratch.assign(n, 0.0);

    f(center, scratch);
    for (std::size_t k = 0; k < n; ++k) {
        p.value[k] = scratch[k] * kKronrodWeights[7];
        gauss[k] = scratch[k] * kGaussWeights[3];
    }
    std::vector<double> other(n, 0.0);
    for (int i = 0; i < 7; ++i) {
        const double dx = half * kKronrodNodes[i];
        f(center - dx, scratch);
        f(center + dx, other);
        for (std::size_t k = 0; k < n; ++k) {
            const double sum = scratch[k] + other[k];
            p.value[k] += kKronrodWeights[i] * sum;
            if (i % 2 == 1) gauss[k] += kGaussWeights[i / 2] * sum;
        }
    }
    for (std::size_t k = 0; k < n; ++k) {
        p.error[k] = std::abs((p.value[k] - gauss[k]) * half);
        p.value[k] *= half;
    }
    return p;
}

} // namespace

QuadratureResult integrate_adaptive(const Integrand& f, double lo, double hi,
                                    const QuadratureSpec& spec)
{
    const std::array<double, 2> bp{lo, hi};
    return integrate_adaptive(f, bp, spec);
}

QuadratureResult integrate_adaptive(const Integrand& f,
                                    std::span<const double> breakpoints,
                                    const QuadratureSpec& spec)
{
    if (!(spec.rel_tol > 0.0)) throw InputError("integrate_adaptive: tolerance must be > 0");
    if (breakpoints.size() < 2) throw InputError("integrate_adaptive: need at least two breakpoints");
    for (std::size_t i = 1; i < breakpoints.size(); ++i)
        if (breakpoints[i] < breakpoints[i - 1])
            throw InputError("integrate_adaptive: breakpoints must be sorted");

    std::vector<Panel> panels;
    for (std::size_t i = 1; i < breakpoints.size(); ++i)
        if (breakpoints[i] > breakpoints[i - 1])
            panels.push_back(gk15(f, breakpoints[i - 1], breakpoints[i]));

    QuadratureResult result;
    if (panels.empty()) return result;

    auto by_error = [](const Panel& a, const Panel& b) { return a.error < b.error; };
    std::make_heap(panels.begin(), panels.end(), by_error);

    while (true) {
        double total = 0.0, err = 0.0;
        for (const auto& p : panels) {
            total += p.value;
            err += p.error;
        }
        result.value = total;
        result.error = err;
        result.panels = static_cast<int>(panels.size());
        if (err <= std::max(spec.rel_tol * std::abs(total), spec.abs_floor)) break;
        if (static_cast<int>(panels.size()) >= spec.max_subdivisions) {
            result.converged = false;
            break;
        }
        std::pop_heap(panels.begin(), panels.end(), by_error);
        const Panel worst = panels.back();
        panels.pop_back();
        const double mid = 0.5 * (worst.lo + worst.hi);
        if (!(mid > worst.lo && mid < worst.hi)) {
            // Panel cannot be split further in double precision.
            panels.push_back({worst.lo, worst.hi, worst.value, 0.0});
            std::push_heap(panels.begin(), panels.end(), by_error);
            continue;
        }
        panels.push_back(gk15(f, worst.lo, mid));
        std::push_heap(panels.begin(), panels.end(), by_error);
        panels.push_back(gk15(f, mid, worst.hi));
        std::push_heap(panels.begin(), panels.end(), by_error);
    }
    return result;
}

VectorQuadratureResult integrate_adaptive_vector(const VectorIntegrand& f, std::size_t n,
                                                 std::span<const double> breakpoints,
                                                 const QuadratureSpec& spec)
{
    if (!(spec.rel_tol > 0.0)) throw InputError("integrate_adaptive_vector: tolerance must be > 0");
    if (breakpoints.size() < 2) throw InputError("integrate_adaptive_vector: need at least two breakpoints");

    std::vector<double> scratch;
    std::vector<VectorPanel> panels;
    for (std::size_t i = 1; i < breakpoints.size(); ++i)
        if (breakpoints[i] > breakpoints[i - 1])
            panels.push_back(gk15_vector(f, n, breakpoints[i - 1], breakpoints[i], scratch));

    VectorQuadratureResult result;
    result.values.assign(n, 0.0);
    result.errors.assign(n, 0.0);
    if (panels.empty() || n == 0) return result;

    while (true) {
        std::fill(result.values.begin(), result.values.end(), 0.0);
        std::fill(result.errors.begin(), result.errors.end(), 0.0);
        for (const auto& p : panels)
            for (std::size_t k = 0; k < n; ++k) {
                result.values[k] += p.value[k];
                result.errors[k] += p.error[k];
            }
        result.panels = static_cast<int>(panels.size());

        // Component furthest from its own tolerance drives the refinement.
        std::size_t worst_k = 0;
        double worst_ratio = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double tol = std::max(spec.rel_tol * std::abs(result.values[k]), spec.abs_floor);
            const double ratio = result.errors[k] / tol;
            if (ratio > worst_ratio) {
                worst_ratio = ratio;
                worst_k = k;
            }
        }
        if (worst_ratio <= 1.0) break;
        if (static_cast<int>(panels.size()) >= spec.max_subdivisions) {
            result.converged = false;
            break;
        }

        std::size_t worst_panel = 0;
        for (std::size_t i = 1; i < panels.size(); ++i)
            if (panels[i].error[worst_k] > panels[worst_panel].error[worst_k]) worst_panel = i;

        VectorPanel victim = std::move(panels[worst_panel]);
        panels[worst_panel] = std::move(panels.back());
        panels.pop_back();
        const double mid = 0.5 * (victim.lo + victim.hi);
        if (!(mid > victim.lo && mid < victim.hi)) {
            std::fill(victim.error.begin(), victim.error.end(), 0.0);
            panels.push_back(std::move(victim));
            continue;
        }
        panels.push_back(gk15_vector(f, n, victim.lo, mid, scratch));
        panels.push_back(gk15_vector(f, n, mid, victim.hi, scratch));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Random sampling

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace

Rng::Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

Rng Rng::stream(std::uint64_t seed, std::uint64_t index)
{
    return Rng(seed ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform_open()
{
    double u;
    do {
        u = uniform();
    } while (u == 0.0);
    return u;
}

double Rng::standard_normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
}

double sample_gaussian(double mean, double sd, Rng& rng)
{
    if (!(sd >= 0.0) || !std::isfinite(mean)) throw InputError("sample_gaussian: sd must be >= 0");
    if (sd == 0.0) return mean;
    return mean + sd * rng.standard_normal();
}

std::int64_t sample_poisson(double mean, Rng& rng)
{
    if (!(mean >= 0.0) || !std::isfinite(mean)) throw InputError("sample_poisson: mean must be >= 0");
    if (mean == 0.0) return 0;

    if (mean < 30.0) {
        const double u = rng.uniform();
        double p = std::exp(-mean);
        double cdf = p;
        std::int64_t n = 0;
        while (u > cdf) {
            ++n;
            p *= mean / static_cast<double>(n);
            cdf += p;
            if (p < 1e-300 && static_cast<double>(n) > mean) break;
        }
        return n;
    }

    // Hormann's transformed rejection with squeeze (PTRS).
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    while (true) {
        const double u = rng.uniform() - 0.5;
        const double v = rng.uniform();
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            -mean + k * loglam - std::lgamma(k + 1.0))
            return static_cast<std::int64_t>(k);
    }
}

} // namespace uvjitter::numerics
