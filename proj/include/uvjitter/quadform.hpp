#pragma once

// Distribution of the shifted Gaussian quadratic form
//   E_r = beta G beta^T + eps,  beta = alpha - shift,  alpha ~ N(0, diag(sd^2))
// as a difference of two positive combinations of noncentral chi-squares,
// each approximated by a moment-matched gamma-polynomial series.

#include <atomic>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "uvjitter/jitter.hpp"
#include "uvjitter/numerics.hpp"

namespace uvjitter::quadform {

/// weight * chi^2_1(noncentrality), weight > 0.
struct SpectralTerm {
    double weight = 0.0;
    double noncentrality = 0.0;
};

struct SpectralForm {
    std::vector<SpectralTerm> pos; ///< positive eigenvalues
    std::vector<SpectralTerm> neg; ///< |lambda| of negative eigenvalues
    double eps = 0.0;
    /// Mean of dropped near-null directions plus the constant left over by
    /// completing the square on the retained ones. Zero for full-rank forms.
    double dropped_mean = 0.0;
    /// Variance of linear terms lost with dropped directions (diagnostic).
    double dropped_variance = 0.0;

    double location() const { return eps + dropped_mean; }
    /// Every eigenvalue was dropped: E_r is deterministic at location().
    bool point_mass() const { return pos.empty() && neg.empty(); }
    double mean() const;
    double variance() const;
};

/// Relative threshold below which eigenvalues are treated as zero.
constexpr double kEigenDropTolerance = 1e-10;

SpectralForm decompose(const jitter::QuadraticModel& model, const jitter::JitterSpec& spec);
SpectralForm decompose(const numerics::SymMatrix4& g, const numerics::Vec4& shift, double eps,
                       const numerics::Vec4& sd);

/// s-th cumulant of sum_i w_i chi^2_1(d_i): 2^(s-1) (s-1)! sum w^s (1 + s d).
double cumulant(std::span<const SpectralTerm> part, int s);

/// Raw moments mu'_0 .. mu'_s from cumulants kappa_1 .. kappa_s
/// (kappa[0] holds kappa_1). The returned vector has size s + 1.
std::vector<double> moments_from_cumulants(std::span<const double> kappa);

constexpr int kDefaultSeriesOrder = 6;
constexpr double kMaxSeriesCondition = 1e12;
/// Support truncation: envelope falls to this fraction of its peak.
constexpr double kEnvelopeFloor = 1e-14;

/// Gamma density times a degree-q polynomial correction:
///   g(x) = x^(a-1) exp(-x/b) / (Gamma(a) b^a) * sum_i m_i x^i.
/// Coefficients are kept in the standardized variable y = x / b
/// (coeffs[i] = m_i b^i); evaluation uses the equivalent generalized
/// Laguerre expansion, which is numerically stable.
struct GammaSeries {
    double shape = 1.0; ///< alpha_g
    double scale = 1.0; ///< beta_g
    int order = 0;      ///< q actually used
    int requested_order = 0;
    double condition = 1.0; ///< cancellation estimate of the moment solve
    std::vector<double> coeffs;   ///< m_i b^i, i = 0..order
    std::vector<double> laguerre; ///< c_k of L_k^(shape-1)(y), k = 0..order
    double lower = 0.0;           ///< support truncation (same units as x)
    double upper = 0.0;

    double density(double x) const;
    /// m_i in the units of x (may overflow for tiny scales).
    double physical_coeff(int i) const;
    bool reduced() const { return order < requested_order; }
};

/// Moment-matched series for a positive chi-square combination. q >= 2.
/// When the moment system is too ill-conditioned the order is lowered one
/// step at a time (never below 2) and reduced() reports it.
GammaSeries fit_gamma_series(std::span<const SpectralTerm> part, int q = kDefaultSeriesOrder);

/// Same fit from raw moments mu'_0 .. mu'_q of a positive random variable.
GammaSeries fit_gamma_series_moments(std::span<const double> raw_moments);

/// Density of E_r for a decomposed form.
class PowerDensity {
public:
    static PowerDensity build(const SpectralForm& form, int q = kDefaultSeriesOrder,
                              const numerics::QuadratureSpec& quadrature = {});

    bool point_mass() const { return !pos_ && !neg_; }
    double location() const { return location_; }
    const std::optional<GammaSeries>& pos_series() const { return pos_; }
    const std::optional<GammaSeries>& neg_series() const { return neg_; }
    const numerics::QuadratureSpec& quadrature() const { return quadrature_; }

    /// Convolution densities of Q = Q1 - Q2: h1 for x >= 0, h2 for x <= 0.
    double h1(double x) const;
    double h2(double x) const;

    /// Unclamped series density at E_r (may dip slightly below zero).
    double raw_density(double e_r) const;
    /// Density clamped at zero.
    double pdf(double e_r) const;
    double cdf(double e_r) const;

    double mean() const { return mean_; }
    double variance() const { return variance_; }

    /// Truncated support [lo, hi] in watts.
    std::pair<double, double> support() const { return support_; }
    /// Initial quadrature partition of the support (includes the seam at eps).
    std::vector<double> breakpoints(int panels = 16) const;

    /// Integral of f(E_r, out) * pdf(E_r) over the support, per component.
    numerics::VectorQuadratureResult expect(const numerics::VectorIntegrand& f, std::size_t n) const;

    double total_mass() const;

    /// Number of quadratures that stopped at the subdivision cap.
    int quadrature_warnings() const { return warnings_->load(); }

private:
    double convolve(double x) const;
    void note(bool converged) const;

    std::optional<GammaSeries> pos_;
    std::optional<GammaSeries> neg_;
    double location_ = 0.0;
    double mean_ = 0.0;
    double variance_ = 0.0;
    std::pair<double, double> support_{0.0, 0.0};
    numerics::QuadratureSpec quadrature_;
    std::shared_ptr<std::atomic<int>> warnings_ = std::make_shared<std::atomic<int>>(0);
};

/// One exact draw from the FTPD model: (alpha - shift) G (alpha - shift)^T + eps.
double sample_power(const jitter::QuadraticModel& model, const jitter::JitterSpec& spec,
                    numerics::Rng& rng);

} // namespace uvjitter::quadform
