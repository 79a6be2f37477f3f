#pragma once

// Stochastic reference computations: jitter-sampled received-power
// histograms (exact channel model or its quadratic approximation) and a
// symbol-level OOK simulation. Results depend only on (seed, config), not on
// the worker count.

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "uvjitter/channel.hpp"
#include "uvjitter/counting.hpp"
#include "uvjitter/jitter.hpp"

namespace uvjitter::montecarlo {

struct McConfig {
    std::uint64_t seed = 1;
    std::int64_t n_samples = 100000;
    std::int64_t n_symbols = 100000000;
    int bins = 200;
    int workers = 1;

    void validate() const;
};

enum class PowerPath { exact, ftpd };

struct Histogram {
    std::vector<double> edges;   ///< bins + 1 edges, W
    std::vector<double> density; ///< per-bin count / (total count * width)
    std::int64_t count = 0;      ///< total samples, including those outside the edges
    std::int64_t outside = 0;
    /// Exact path only: samples whose jittered geometry was invalid or had no
    /// common volume, scored as E_r = 0.
    std::int64_t zeroed = 0;

    int bins() const { return static_cast<int>(density.size()); }
    double width(int i) const { return edges[i + 1] - edges[i]; }
    /// Index of the bin containing x, or -1.
    int bin_of(double x) const;
    /// Sum of density * width; 1 unless samples fell outside the edges.
    double mass() const;
};

/// Raw samples in a worker-count-independent order.
struct PowerSamples {
    std::vector<double> values;
    std::int64_t zeroed = 0;
};

PowerSamples sample_powers(const channel::LinkGeometry& g, const channel::ChannelParams& p,
                           const jitter::JitterSpec& spec, const McConfig& cfg, PowerPath path);

/// Histogram over [lo, hi]; without a range the sample extremes are used.
Histogram make_histogram(const std::vector<double>& samples, int bins,
                         std::optional<std::pair<double, double>> range = std::nullopt);

Histogram mc_power(const channel::LinkGeometry& g, const channel::ChannelParams& p,
                   const jitter::JitterSpec& spec, const McConfig& cfg, PowerPath path,
                   std::optional<std::pair<double, double>> range = std::nullopt);

/// L1 distance between a histogram and a density: per-bin averages of pdf
/// (3-point Gauss) against the bin densities, plus the sampled mass outside
/// the edges.
double l1_distance(const Histogram& h, const std::function<double(double)>& pdf);

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

constexpr double kZ95 = 1.959963984540054;

Interval wilson_interval(std::int64_t successes, std::int64_t trials, double z = kZ95);

struct BerEstimate {
    std::int64_t errors = 0;
    std::int64_t symbols = 0;
    double ber = 0.0;
    Interval ci;
};

/// Symbol simulation: bits drawn with the given priors; a "1" draws E_r
/// from the quadratic model and Poisson(lambda_s(E_r) + lambda_b) counts, a
/// "0" draws Poisson(lambda_b). Decide "1" when the count exceeds threshold.
BerEstimate mc_ber(const jitter::QuadraticModel& model, const jitter::JitterSpec& spec,
                   const counting::DetectorParams& d, double lambda_b, std::int64_t threshold,
                   const McConfig& cfg, counting::Priors priors = {});

BerEstimate mc_ber(const channel::LinkGeometry& g, const channel::ChannelParams& p,
                   const jitter::JitterSpec& spec, const counting::DetectorParams& d,
                   double lambda_b, std::int64_t threshold, const McConfig& cfg,
                   counting::Priors priors = {});

/// Runs body(block, rng) for blocks 0..n_blocks-1 on cfg.workers threads;
/// block b always receives Rng::stream(seed, b).
void parallel_blocks(std::int64_t n_blocks, const McConfig& cfg,
                     const std::function<void(std::int64_t, numerics::Rng&)>& body);

} // namespace uvjitter::montecarlo
