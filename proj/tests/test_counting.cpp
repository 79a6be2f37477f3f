#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "uvjitter/counting.hpp"
#include "uvjitter/error.hpp"

using namespace uvjitter;
using namespace uvjitter::counting;
using jitter::JitterSpec;
using numerics::Rng;

namespace {

double direct_pmf(int n, double mean)
{
    if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
    return std::exp(n * std::log(mean) - mean - std::lgamma(n + 1.0));
}

double direct_cdf(int n, double mean)
{
    double s = 0.0;
    for (int k = 0; k <= n; ++k) s += direct_pmf(k, mean);
    return s;
}

// Exhaustive threshold search with summed pmfs.
double brute_force_ber(double ls, double lb)
{
    double best = 1.0;
    for (int t = -1; t <= 400; ++t) {
        const double miss = t < 0 ? 0.0 : direct_cdf(t, ls + lb);
        const double false_alarm = t < 0 ? 1.0 : 1.0 - direct_cdf(t, lb);
        best = std::min(best, 0.5 * miss + 0.5 * false_alarm);
    }
    return best;
}

struct Case {
    jitter::QuadraticModel model;
    JitterSpec spec;
    quadform::PowerDensity density;
    DetectorParams det;
};

Case make_case(double theta, double kbps, double sigma)
{
    const auto g = testing_support::geometry(theta, theta, 5, 0);
    Case c{jitter::expand_ftpd(g, channel::ChannelParams{}), JitterSpec::isotropic(sigma), {},
           testing_support::detector(kbps)};
    c.density = quadform::PowerDensity::build(quadform::decompose(c.model, c.spec));
    return c;
}

} // namespace

TEST(LambdaS, Conversion)
{
    const DetectorParams d;
    EXPECT_EQ(lambda_s(0.0, d), 0.0);
    EXPECT_EQ(lambda_s(-1e-12, d), 0.0);
    // Power that yields exactly one detected photon per slot.
    const double photon = kPlanck * kSpeedOfLight / d.wavelength_m;
    const double one = photon / (d.eta_filter * d.eta_detector * d.pulse_s);
    EXPECT_NEAR(lambda_s(one, d), 1.0, 1e-12);
    EXPECT_NEAR(lambda_s(1e-12, d), 1e-12 * 0.06 * 260e-9 / (6.62607015e-34 * 2.99792458e8) / 96000.0,
                1e-12);
    EXPECT_NEAR(d.background_mean(), 14500.0 / 96000.0, 1e-15);
}

TEST(Poisson, PmfCdfTails)
{
    EXPECT_EQ(pmf_poisson(0, 0.0), 1.0);
    EXPECT_EQ(pmf_poisson(2, 0.0), 0.0);
    EXPECT_NEAR(pmf_poisson(3, 2.0), 0.180447044315484, 1e-14);
    double s = 0.0;
    for (int n = 0; n < 200; ++n) s += pmf_poisson(n, 14.5);
    EXPECT_NEAR(s, 1.0, 1e-12);
    for (int n = 0; n < 60; ++n) {
        EXPECT_NEAR(cdf_poisson(n, 14.5), direct_cdf(n, 14.5), 1e-12);
        EXPECT_NEAR(cdf_poisson(n, 14.5) + sf_poisson(n, 14.5), 1.0, 1e-14);
    }
    EXPECT_EQ(cdf_poisson(-1, 3.0), 0.0);
    EXPECT_EQ(sf_poisson(-1, 3.0), 1.0);
    // Deep tail keeps relative accuracy.
    double tail = 0.0;
    for (int n = 61; n < 200; ++n) tail += direct_pmf(n, 5.0);
    EXPECT_NEAR(sf_poisson(60, 5.0), tail, 1e-10 * tail);
}

TEST(Poisson, CountCutoff)
{
    const int n = count_cutoff(20.0);
    EXPECT_LT(sf_poisson(n, 20.0), 1e-12);
    EXPECT_GE(sf_poisson(n - 1, 20.0), 1e-12);
}

TEST(JitteredPmf, DegenerateJitterReducesToPoisson)
{
    const auto c = make_case(30, 96, 0.0);
    ASSERT_TRUE(c.density.point_mass());
    const double lb = c.det.background_mean();
    const double mean = lambda_s(c.density.location(), c.det) + lb;
    for (int n = 0; n < 50; ++n) EXPECT_NEAR(pmf_jitter(n, c.density, c.det, lb), pmf_poisson(n, mean), 1e-15);
}

TEST(JitteredPmf, SumsToOne)
{
    const auto c = make_case(30, 96, 0.04);
    const double lb = c.det.background_mean();
    const auto t = pmf_jitter_table(c.density, c.det, lb, 400);
    double s = 0.0;
    for (double p : t) s += p;
    EXPECT_NEAR(s, 1.0, 1e-3);
    const auto cdf = cdf_jitter_table(c.density, c.det, lb, 400);
    double run = 0.0;
    for (int k = 0; k <= 400; k += 37) {
        run = 0.0;
        for (int i = 0; i <= k; ++i) run += t[i];
        EXPECT_NEAR(cdf[k], run, 1e-8);
        EXPECT_NEAR(cdf_jitter(k, c.density, c.det, lb), cdf[k], 1e-8);
    }
    EXPECT_EQ(cdf_jitter(-1, c.density, c.det, lb), 0.0);
}

TEST(JitteredPmf, MatchesSampledMarginalization)
{
    const auto c = make_case(30, 96, 0.02);
    const double lb = c.det.background_mean();
    const int n_max = 60, samples = 1000000;
    std::vector<double> sum(n_max + 1, 0.0), sq(n_max + 1, 0.0);
    Rng rng(41);
    for (int i = 0; i < samples; ++i) {
        const double mean = lambda_s(quadform::sample_power(c.model, c.spec, rng), c.det) + lb;
        for (int n = 0; n <= n_max; ++n) {
            const double p = pmf_poisson(n, mean);
            sum[n] += p;
            sq[n] += p * p;
        }
    }
    const auto table = pmf_jitter_table(c.density, c.det, lb, n_max);
    for (int n = 0; n <= n_max; ++n) {
        const double m = sum[n] / samples;
        const double se = std::sqrt(std::max(sq[n] / samples - m * m, 0.0) / samples);
        EXPECT_NEAR(table[n], m, 3.0 * se + 0.02 * m) << "n = " << n;
    }
}

TEST(JitteredCdf, InsideDkwBandOfSampledCounts)
{
    const auto c = make_case(30, 96, 0.04);
    const double lb = c.det.background_mean();
    const int samples = 200000;
    std::vector<int> counts(samples);
    Rng rng(6);
    for (auto& k : counts) {
        const double mean = lambda_s(quadform::sample_power(c.model, c.spec, rng), c.det) + lb;
        k = static_cast<int>(numerics::sample_poisson(mean, rng));
    }
    std::sort(counts.begin(), counts.end());
    const double band = std::sqrt(std::log(2.0 / 1e-3) / (2.0 * samples));
    const auto cdf = cdf_jitter_table(c.density, c.det, lb, 150);
    for (int k = 0; k <= 150; ++k) {
        const double emp =
            static_cast<double>(std::upper_bound(counts.begin(), counts.end(), k) - counts.begin()) /
            samples;
        EXPECT_NEAR(cdf[k], emp, band) << "k = " << k;
    }
    EXPECT_NEAR(cdf[150], 1.0, 1e-4);
}

TEST(BerNoJitter, ClosedFormLimits)
{
    for (double ls : {0.5, 3.0, 12.0}) {
        const auto r = ber_no_jitter(ls, 0.0);
        EXPECT_NEAR(r.error_probability, 0.5 * std::exp(-ls), 1e-15);
        EXPECT_EQ(r.threshold, 0);
    }
    EXPECT_NEAR(ber_no_jitter(0.0, 3.0).error_probability, 0.5, 1e-15);
    EXPECT_THROW(ber_no_jitter(-1.0, 0.1), InputError);
}

TEST(BerNoJitter, MatchesExhaustiveSearch)
{
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const double ls = 60.0 * rng.uniform();
        const double lb = 20.0 * rng.uniform();
        const double got = ber_no_jitter(ls, lb).error_probability;
        const double want = brute_force_ber(ls, lb);
        EXPECT_NEAR(got, want, 1e-12 + 1e-9 * want) << ls << " " << lb;
    }
}

TEST(BerNoJitter, MonotoneInSignal)
{
    double prev = 0.6;
    for (double ls = 0.0; ls <= 40.0; ls += 0.5) {
        const double p = ber_no_jitter(ls, 0.15).error_probability;
        EXPECT_LE(p, prev + 1e-15);
        prev = p;
    }
}

TEST(BerJitter, SmallSigmaApproachesNoJitter)
{
    const auto c = make_case(30, 96, 1e-5);
    const double lb = c.det.background_mean();
    const auto j = ber_jitter(c.density, c.det, lb);
    const auto n = ber_no_jitter(lambda_s(c.model.f0, c.det), lb);
    EXPECT_NEAR(j.error_probability, n.error_probability, 1e-3 * n.error_probability);
    EXPECT_EQ(j.threshold, n.threshold);
}

TEST(BerJitter, BoundedAndWorseThanNoJitter)
{
    for (double sigma : {0.02, 0.04, 0.07}) {
        const auto c = make_case(30, 96, sigma);
        const double lb = c.det.background_mean();
        const auto j = ber_jitter(c.density, c.det, lb);
        EXPECT_GE(j.error_probability, 0.0);
        EXPECT_LE(j.error_probability, 0.5);
        EXPECT_GT(j.error_probability, ber_no_jitter(lambda_s(c.model.f0, c.det), lb).error_probability);
        // Optimal threshold beats its neighbours.
        EXPECT_LE(j.error_probability, ber_jitter_at(j.threshold - 1, c.density, c.det, lb) + 1e-18);
        EXPECT_LE(j.error_probability, ber_jitter_at(j.threshold + 1, c.density, c.det, lb) + 1e-18);
    }
}

TEST(Detector, ValidateRejectsBadParameters)
{
    DetectorParams d;
    d.eta_filter = 1.5;
    EXPECT_THROW(d.validate(), InputError);
    d = DetectorParams{};
    d.pulse_s = 0.0;
    EXPECT_THROW(d.validate(), InputError);
}
