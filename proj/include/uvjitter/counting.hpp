#pragma once

// Photon-counting detection: watts to photon counts, Poisson count laws
// with and without jitter marginalization, and OOK error probability with
// an optimal count threshold.

#include <cstdint>
#include <vector>

#include "uvjitter/quadform.hpp"

namespace uvjitter::counting {

constexpr double kPlanck = 6.62607015e-34;    ///< J s
constexpr double kSpeedOfLight = 2.99792458e8; ///< m/s

struct DetectorParams {
    double eta_filter = 0.2;
    double eta_detector = 0.3;
    double wavelength_m = 260e-9;
    double pulse_s = 1.0 / 96000.0; ///< T_p, one OOK slot
    double background_cps = 14500.0; ///< N_n

    void validate() const;
    double background_mean() const { return background_cps * pulse_s; } ///< lambda_b
};

struct LinkBudget {
    double signal_mean = 0.0;     ///< lambda_s
    double background_mean = 0.0; ///< lambda_b
};

/// Mean signal photons per pulse; negative powers (possible under the
/// quadratic approximation) count as zero.
double lambda_s(double e_r, const DetectorParams& d);

double pmf_poisson(std::int64_t n, double mean);
/// P(N <= n); 0 for n < 0.
double cdf_poisson(std::int64_t n, double mean);
/// P(N > n); 1 for n < 0.
double sf_poisson(std::int64_t n, double mean);

/// Jitter-marginalized count PMF for n = 0..n_max in one quadrature pass.
std::vector<double> pmf_jitter_table(const quadform::PowerDensity& density,
                                     const DetectorParams& d, double lambda_b, int n_max);

double pmf_jitter(std::int64_t n, const quadform::PowerDensity& density, const DetectorParams& d,
                  double lambda_b);

/// Partial sum of the jittered PMF up to k (computed as the mixture of
/// Poisson CDFs); 0 for k < 0.
double cdf_jitter(std::int64_t k, const quadform::PowerDensity& density, const DetectorParams& d,
                  double lambda_b);

/// cdf_jitter for k = 0..k_max in one quadrature pass.
std::vector<double> cdf_jitter_table(const quadform::PowerDensity& density,
                                     const DetectorParams& d, double lambda_b, int k_max);

/// Count index at which the Poisson tail of the largest mean on the
/// support drops below tail.
int count_cutoff(double max_mean, double tail = 1e-12);

struct BerResult {
    double error_probability = 0.5;
    std::int64_t threshold = 0; ///< decide "1" when n > threshold
};

struct Priors {
    double p_one = 0.5;
    double p_zero = 0.5;
};

/// Threshold search range [floor(lambda_b), floor(lambda_s_max + lambda_b) + 1].
std::pair<std::int64_t, std::int64_t> threshold_range(double lambda_s_max, double lambda_b);

BerResult ber_no_jitter(double lambda_s, double lambda_b, Priors priors = {});

BerResult ber_jitter(const quadform::PowerDensity& density, const DetectorParams& d,
                     double lambda_b, Priors priors = {});

/// Error probability with jitter at a fixed threshold.
double ber_jitter_at(std::int64_t threshold, const quadform::PowerDensity& density,
                     const DetectorParams& d, double lambda_b, Priors priors = {});

} // namespace uvjitter::counting
