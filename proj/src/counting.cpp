#include "uvjitter/counting.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "uvjitter/error.hpp"

namespace uvjitter::counting {

namespace {

// Probabilities below this are irrelevant to any BER the tools report.
constexpr double kProbabilityFloor = 1e-16;

numerics::QuadratureSpec count_quadrature(const quadform::PowerDensity& density)
{
    auto spec = density.quadrature();
    spec.abs_floor = std::max(spec.abs_floor, kProbabilityFloor);
    return spec;
}

numerics::VectorQuadratureResult expect_counts(const quadform::PowerDensity& density,
                                               const numerics::VectorIntegrand& f, std::size_t n)
{
    if (density.point_mass()) return density.expect(f, n);
    auto weighted = [&](double e, std::span<double> out) {
        const double w = density.pdf(e);
        if (w == 0.0) {
            std::fill(out.begin(), out.end(), 0.0);
            return;
        }
        f(e, out);
        for (auto& v : out) v *= w;
    };
    return numerics::integrate_adaptive_vector(weighted, n, density.breakpoints(),
                                               count_quadrature(density));
}

double max_signal_mean(const quadform::PowerDensity& density, const DetectorParams& d)
{
    if (density.point_mass()) return lambda_s(density.location(), d);
    return lambda_s(density.support().second, d);
}

} // namespace

void DetectorParams::validate() const
{
    if (!(eta_filter > 0.0 && eta_filter <= 1.0) || !(eta_detector > 0.0 && eta_detector <= 1.0))
        throw InputError("quantum efficiencies must lie in (0, 1]");
    if (!(wavelength_m > 0.0)) throw InputError("wavelength must be > 0");
    if (!(pulse_s > 0.0)) throw InputError("pulse duration must be > 0");
    if (!(background_cps >= 0.0)) throw InputError("background count rate must be >= 0");
}

double lambda_s(double e_r, const DetectorParams& d)
{
    const double rate = d.eta_filter * d.eta_detector * std::max(e_r, 0.0) * d.wavelength_m /
                        (kPlanck * kSpeedOfLight);
    return rate * d.pulse_s;
}

double pmf_poisson(std::int64_t n, double mean)
{
    if (n < 0) return 0.0;
    if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
    const double k = static_cast<double>(n);
    return std::exp(-mean + k * std::log(mean) - std::lgamma(k + 1.0));
}

double cdf_poisson(std::int64_t n, double mean)
{
    if (n < 0) return 0.0;
    if (mean == 0.0) return 1.0;
    return boost::math::gamma_q(static_cast<double>(n) + 1.0, mean);
}

double sf_poisson(std::int64_t n, double mean)
{
    if (n < 0) return 1.0;
    if (mean == 0.0) return 0.0;
    return boost::math::gamma_p(static_cast<double>(n) + 1.0, mean);
}

int count_cutoff(double max_mean, double tail)
{
    int n = static_cast<int>(std::floor(max_mean));
    while (sf_poisson(n, max_mean) >= tail) ++n;
    return n;
}

std::vector<double> pmf_jitter_table(const quadform::PowerDensity& density,
                                     const DetectorParams& d, double lambda_b, int n_max)
{
    if (n_max < 0) return {};
    std::vector<double> log_fact(n_max + 1);
    for (int n = 0; n <= n_max; ++n) log_fact[n] = std::lgamma(n + 1.0);

    auto pmfs = [&](double e, std::span<double> out) {
        const double mean = lambda_s(e, d) + lambda_b;
        if (mean == 0.0) {
            std::fill(out.begin(), out.end(), 0.0);
            out[0] = 1.0;
            return;
        }
        const double log_mean = std::log(mean);
        for (int n = 0; n <= n_max; ++n) out[n] = std::exp(-mean + n * log_mean - log_fact[n]);
    };
    return expect_counts(density, pmfs, n_max + 1).values;
}

double pmf_jitter(std::int64_t n, const quadform::PowerDensity& density, const DetectorParams& d,
                  double lambda_b)
{
    if (n < 0) return 0.0;
    auto f = [&](double e, std::span<double> out) { out[0] = pmf_poisson(n, lambda_s(e, d) + lambda_b); };
    return expect_counts(density, f, 1).values[0];
}

double cdf_jitter(std::int64_t k, const quadform::PowerDensity& density, const DetectorParams& d,
                  double lambda_b)
{
    if (k < 0) return 0.0;
    auto f = [&](double e, std::span<double> out) { out[0] = cdf_poisson(k, lambda_s(e, d) + lambda_b); };
    return expect_counts(density, f, 1).values[0];
}

std::vector<double> cdf_jitter_table(const quadform::PowerDensity& density,
                                     const DetectorParams& d, double lambda_b, int k_max)
{
    if (k_max < 0) return {};
    auto cdfs = [&](double e, std::span<double> out) {
        const double mean = lambda_s(e, d) + lambda_b;
        for (int k = 0; k <= k_max; ++k) out[k] = cdf_poisson(k, mean);
    };
    return expect_counts(density, cdfs, k_max + 1).values;
}

std::pair<std::int64_t, std::int64_t> threshold_range(double lambda_s_max, double lambda_b)
{
    const auto lo = static_cast<std::int64_t>(std::floor(lambda_b));
    const auto hi = static_cast<std::int64_t>(std::floor(lambda_s_max + lambda_b)) + 1;
    return {lo, std::max(lo, hi)};
}

BerResult ber_no_jitter(double ls, double lb, Priors priors)
{
    if (!(ls >= 0.0) || !(lb >= 0.0)) throw InputError("ber_no_jitter: photon means must be >= 0");
    const auto [lo, hi] = threshold_range(ls, lb);
    BerResult best{2.0, lo};
    for (std::int64_t k = lo; k <= hi; ++k) {
        const double p = priors.p_one * cdf_poisson(k, ls + lb) + priors.p_zero * sf_poisson(k, lb);
        if (p < best.error_probability) best = {p, k};
    }
    return best;
}

double ber_jitter_at(std::int64_t threshold, const quadform::PowerDensity& density,
                     const DetectorParams& d, double lambda_b, Priors priors)
{
    auto f = [&](double e, std::span<double> out) {
        out[0] = cdf_poisson(threshold, lambda_s(e, d) + lambda_b);
    };
    const double miss = expect_counts(density, f, 1).values[0];
    return priors.p_one * miss + priors.p_zero * sf_poisson(threshold, lambda_b);
}

BerResult ber_jitter(const quadform::PowerDensity& density, const DetectorParams& d,
                     double lambda_b, Priors priors)
{
    const auto [lo, hi] = threshold_range(max_signal_mean(density, d), lambda_b);
    const auto count = static_cast<std::size_t>(hi - lo + 1);

    auto cdfs = [&](double e, std::span<double> out) {
        const double mean = lambda_s(e, d) + lambda_b;
        for (std::size_t i = 0; i < count; ++i)
            out[i] = cdf_poisson(lo + static_cast<std::int64_t>(i), mean);
    };
    const auto miss = expect_counts(density, cdfs, count).values;

    BerResult best{2.0, lo};
    for (std::size_t i = 0; i < count; ++i) {
        const std::int64_t k = lo + static_cast<std::int64_t>(i);
        const double p = priors.p_one * miss[i] + priors.p_zero * sf_poisson(k, lambda_b);
        if (p < best.error_probability) best = {p, k};
    }
    return best;
}

} // namespace uvjitter::counting
