#include "uvjitter/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "uvjitter/error.hpp"

namespace uvjitter::montecarlo {

namespace {

constexpr std::int64_t kPowerBlock = 4096;
constexpr std::int64_t kSymbolBlock = 1 << 20;

std::int64_t block_count(std::int64_t n, std::int64_t block) { return (n + block - 1) / block; }

numerics::Vec4 draw_jitter(const jitter::JitterSpec& spec, numerics::Rng& rng)
{
    numerics::Vec4 a{};
    for (int i = 0; i < 4; ++i) a[i] = numerics::sample_gaussian(0.0, spec.sd[i], rng);
    return a;
}

} // namespace

void McConfig::validate() const
{
    if (n_samples <= 0) throw InputError("mc.n_samples must be > 0");
    if (n_symbols <= 0) throw InputError("mc.n_symbols must be > 0");
    if (bins <= 0) throw InputError("mc.bins must be > 0");
    if (workers <= 0) throw InputError("mc.workers must be > 0");
}

int Histogram::bin_of(double x) const
{
    if (edges.empty() || x < edges.front() || x > edges.back()) return -1;
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    const int i = static_cast<int>(it - edges.begin()) - 1;
    return std::min(i, bins() - 1);
}

double Histogram::mass() const
{
    double m = 0.0;
    for (int i = 0; i < bins(); ++i) m += density[i] * width(i);
    return m;
}

void parallel_blocks(std::int64_t n_blocks, const McConfig& cfg,
                     const std::function<void(std::int64_t, numerics::Rng&)>& body)
{
    std::atomic<std::int64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        try {
            for (std::int64_t b = next++; b < n_blocks; b = next++) {
                auto rng = numerics::Rng::stream(cfg.seed, static_cast<std::uint64_t>(b));
                body(b, rng);
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = n_blocks;
        }
    };

    const int n_threads = static_cast<int>(std::min<std::int64_t>(cfg.workers, n_blocks));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

PowerSamples sample_powers(const channel::LinkGeometry& g, const channel::ChannelParams& p,
                           const jitter::JitterSpec& spec, const McConfig& cfg, PowerPath path)
{
    cfg.validate();
    spec.validate();
    const auto base = jitter::fold_means(g, spec);

    std::optional<jitter::QuadraticModel> model;
    if (path == PowerPath::ftpd) model = jitter::expand_ftpd(base, p);

    const std::int64_t n_blocks = block_count(cfg.n_samples, kPowerBlock);
    PowerSamples out;
    out.values.resize(static_cast<std::size_t>(cfg.n_samples));
    std::vector<std::int64_t> zeroed(static_cast<std::size_t>(n_blocks), 0);

    parallel_blocks(n_blocks, cfg, [&](std::int64_t b, numerics::Rng& rng) {
        const std::int64_t first = b * kPowerBlock;
        const std::int64_t last = std::min(cfg.n_samples, first + kPowerBlock);
        for (std::int64_t i = first; i < last; ++i) {
            const auto alpha = draw_jitter(spec, rng);
            double e;
            if (model) {
                e = model->shifted(alpha);
            } else {
                try {
                    const auto moved = jitter::perturb(base, alpha);
                    const auto cv = channel::common_volume(moved, p.chord);
                    e = channel::received_power(moved, p, cv);
                    if (cv.empty) ++zeroed[b];
                } catch (const DomainError&) {
                    e = 0.0;
                    ++zeroed[b];
                }
            }
            out.values[static_cast<std::size_t>(i)] = e;
        }
    });
    for (auto z : zeroed) out.zeroed += z;
    return out;
}

Histogram make_histogram(const std::vector<double>& samples, int bins,
                         std::optional<std::pair<double, double>> range)
{
    if (bins <= 0) throw InputError("histogram needs at least one bin");
    if (samples.empty()) throw InputError("histogram needs at least one sample");

    double lo, hi;
    if (range) {
        std::tie(lo, hi) = *range;
        if (!(hi > lo)) throw InputError("histogram range must satisfy lo < hi");
    } else {
        const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
        lo = *mn;
        hi = *mx;
        if (!(hi > lo)) {
            const double pad = std::max(std::abs(lo) * 1e-9, 1e-300);
            lo -= pad;
            hi += pad;
        }
    }

    Histogram h;
    h.edges.resize(bins + 1);
    for (int i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * i / bins;
    h.edges[bins] = hi;
    h.density.assign(bins, 0.0);
    h.count = static_cast<std::int64_t>(samples.size());

    std::vector<std::int64_t> counts(bins, 0);
    for (double x : samples) {
        const int i = h.bin_of(x);
        if (i < 0)
            ++h.outside;
        else
            ++counts[i];
    }
    const double n = static_cast<double>(h.count);
    for (int i = 0; i < bins; ++i) h.density[i] = counts[i] / (n * h.width(i));
    return h;
}

Histogram mc_power(const channel::LinkGeometry& g, const channel::ChannelParams& p,
                   const jitter::JitterSpec& spec, const McConfig& cfg, PowerPath path,
                   std::optional<std::pair<double, double>> range)
{
    const auto s = sample_powers(g, p, spec, cfg, path);
    auto h = make_histogram(s.values, cfg.bins, range);
    h.zeroed = s.zeroed;
    return h;
}

double l1_distance(const Histogram& h, const std::function<double(double)>& pdf)
{
    static constexpr double node = 0.7745966692414834; // sqrt(3/5)
    static constexpr double w_outer = 5.0 / 18.0, w_mid = 8.0 / 18.0;
    double d = 0.0;
    for (int i = 0; i < h.bins(); ++i) {
        const double mid = 0.5 * (h.edges[i] + h.edges[i + 1]);
        const double half = 0.5 * h.width(i);
        const double avg =
            w_outer * pdf(mid - node * half) + w_mid * pdf(mid) + w_outer * pdf(mid + node * half);
        d += std::abs(h.density[i] - avg) * h.width(i);
    }
    return d + static_cast<double>(h.outside) / static_cast<double>(h.count);
}

Interval wilson_interval(std::int64_t successes, std::int64_t trials, double z)
{
    if (trials <= 0) throw InputError("wilson_interval needs trials > 0");
    if (successes < 0 || successes > trials) throw InputError("wilson_interval: successes out of range");
    const double n = static_cast<double>(trials);
    const double ph = successes / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (ph + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(ph * (1.0 - ph) / n + z2 / (4.0 * n * n)) / denom;
    return {successes == 0 ? 0.0 : std::max(0.0, centre - half),
            successes == trials ? 1.0 : std::min(1.0, centre + half)};
}

BerEstimate mc_ber(const jitter::QuadraticModel& model, const jitter::JitterSpec& spec,
                   const counting::DetectorParams& d, double lambda_b, std::int64_t threshold,
                   const McConfig& cfg, counting::Priors priors)
{
    cfg.validate();
    spec.validate();
    if (!(lambda_b >= 0.0)) throw InputError("mc_ber: lambda_b must be >= 0");
    if (!(priors.p_one >= 0.0 && priors.p_one <= 1.0))
        throw InputError("mc_ber: prior of a one must lie in [0, 1]");

    const std::int64_t n_blocks = block_count(cfg.n_symbols, kSymbolBlock);
    std::vector<std::int64_t> errors(static_cast<std::size_t>(n_blocks), 0);

    parallel_blocks(n_blocks, cfg, [&](std::int64_t b, numerics::Rng& rng) {
        const std::int64_t first = b * kSymbolBlock;
        const std::int64_t last = std::min(cfg.n_symbols, first + kSymbolBlock);
        std::int64_t err = 0;
        for (std::int64_t i = first; i < last; ++i) {
            if (rng.uniform() < priors.p_one) {
                const double e = model.shifted(draw_jitter(spec, rng));
                const double mean = counting::lambda_s(e, d) + lambda_b;
                if (numerics::sample_poisson(mean, rng) <= threshold) ++err;
            } else {
                if (numerics::sample_poisson(lambda_b, rng) > threshold) ++err;
            }
        }
        errors[b] = err;
    });

    BerEstimate r;
    r.symbols = cfg.n_symbols;
    for (auto e : errors) r.errors += e;
    r.ber = static_cast<double>(r.errors) / static_cast<double>(r.symbols);
    r.ci = wilson_interval(r.errors, r.symbols);
    return r;
}

BerEstimate mc_ber(const channel::LinkGeometry& g, const channel::ChannelParams& p,
                   const jitter::JitterSpec& spec, const counting::DetectorParams& d,
                   double lambda_b, std::int64_t threshold, const McConfig& cfg,
                   counting::Priors priors)
{
    const auto model = jitter::expand_ftpd(jitter::fold_means(g, spec), p);
    return mc_ber(model, spec, d, lambda_b, threshold, cfg, priors);
}

} // namespace uvjitter::montecarlo
