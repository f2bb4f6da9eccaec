#include "msfm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <optional>
#include <thread>

#include "msfm/error.hpp"
#include "msfm/filters.hpp"
#include "msfm/inference.hpp"
#include "msfm/rng.hpp"
#include "msfm/simulate.hpp"

namespace msfm {
namespace {

// Runs body(i) for i in [0, n) on up to `jobs` threads. Results must be written by index.
template <class Body>
void parallel_for(std::size_t n, unsigned jobs, Body&& body) {
    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) body(i);
        });
    }
}

double sample_mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double normal_pdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

ModelSpec model_for(const McConfig& config) {
    ExampleParams params;
    params.Sigma = config.Sigma;
    params.sigma = config.sigma;
    params.delta = config.delta;
    params.bounds = config.bounds;
    return make_example(config.example, params);
}

}  // namespace

void McConfig::validate() const {
    if (example == ExampleTag::Custom) throw InvalidArgument("mc study: custom models are not supported");
    if (n_replicates < 2) throw InvalidArgument("mc study: n_replicates must be >= 2");
    if (!(Sigma > 0.0) || !(delta > 0.0) || !(sigma >= 0.0))
        throw InvalidArgument("mc study: Sigma, delta must be > 0 and sigma >= 0");
    if (!(bounds.lo < bounds.hi)) throw InvalidArgument("mc study: theta bounds need lo < hi");
    if (n_bins < 2) throw InvalidArgument("mc study: n_bins must be >= 2");
    grid_steps(T, dt);
}

double theoretical_stderr_for(const McConfig& config) {
    const ModelSpec model = model_for(config);
    double fisher = 0.0;
    if (model.slow_is_chain) {
        const std::uint64_t seed = derive_seed(config.root_seed, 0xf15e7ULL);
        fisher = fisher_numeric(model, config.true_alpha, config.fisher_T, config.dt, seed);
    } else {
        fisher = fisher_closed(reduce(model), config.true_alpha);
    }
    return theoretical_stderr(fisher, config.T);
}

McResult run_mc_study(const McConfig& config) {
    config.validate();
    const ModelSpec model = model_for(config);

    MleOptions mle_options;
    mle_options.with_fisher = false;

    const std::size_t n = config.n_replicates;
    std::vector<std::optional<EstimationResult>> outcomes(n);
    parallel_for(n, config.jobs, [&](std::size_t i) {
        const std::uint64_t seed = config.identical_seeds ? config.root_seed : derive_seed(config.root_seed, i);
        try {
            const Path path = simulate_multiscale(model, config.true_alpha, config.T, config.dt, seed);
            outcomes[i] = mle(model, path, mle_options);
        } catch (const Error&) {
            outcomes[i].reset();
        }
    });

    McResult result;
    for (const auto& outcome : outcomes) {
        if (!outcome) {
            ++result.n_fail;
            continue;
        }
        ++result.n_ok;
        if (outcome->clamped) ++result.n_clamped;
        result.estimates.push_back(outcome->theta_hat);
    }
    if (static_cast<double>(result.n_fail) > 0.05 * static_cast<double>(n))
        throw Error("mc study: more than 5% of replicates failed");

    result.mean_estimate = sample_mean(result.estimates);
    result.empirical_stderr = sample_sd(result.estimates, result.mean_estimate);
    result.theoretical_stderr = theoretical_stderr_for(config);
    result.histogram = histogram_with_normal_overlay(result.estimates, config.true_alpha,
                                                     result.theoretical_stderr, config.n_bins);
    return result;
}

std::vector<ConvergenceRow> filter_convergence_study(const ModelSpec& base, double alpha,
                                                     std::span<const double> deltas,
                                                     const ConvergenceOptions& options) {
    if (deltas.size() < 2) throw InvalidArgument("convergence study: need at least two deltas");
    for (std::size_t i = 1; i < deltas.size(); ++i)
        if (deltas[i] > deltas[i - 1])
            throw InvalidArgument("convergence study: deltas must be non-increasing");
    if (options.n_replicates < 2) throw InvalidArgument("convergence study: n_replicates must be >= 2");

    const ReducedLinearModel reduced = reduce(base);
    const std::size_t reps = options.n_replicates;

    std::vector<ConvergenceRow> rows;
    for (std::size_t r = 0; r < deltas.size(); ++r) {
        ModelSpec model = base;
        model.delta = deltas[r];
        model.validate();

        std::vector<double> mse(reps);
        parallel_for(reps, options.jobs, [&](std::size_t j) {
            const std::uint64_t seed = derive_seed(options.root_seed, r * reps + j);
            const Path path = simulate_multiscale(model, alpha, options.T, options.dt, seed);
            const ParticleFilterResult pf =
                particle_filter(model, alpha, path, options.n_particles, derive_seed(seed, 1));
            KalmanOptions kalman_options;
            kalman_options.scheme = Discretization::SampledData;
            const FilterPath kf = kalman_bucy(reduced, alpha, path, kalman_options);
            double sum = 0.0;
            for (std::size_t k = 0; k < path.n_steps; ++k) {
                const double diff = pf.path.pi_h[k] - kf.pi_h[k];
                sum += diff * diff;
            }
            mse[j] = sum / static_cast<double>(path.n_steps);
        });

        const double mean = sample_mean(mse);
        rows.push_back({deltas[r], mean, sample_sd(mse, mean) / std::sqrt(static_cast<double>(reps))});
    }
    return rows;
}

Histogram histogram_with_normal_overlay(std::span<const double> estimates, double alpha, double stderr,
                                        std::size_t n_bins) {
    if (estimates.empty()) throw InvalidArgument("histogram: no estimates");
    if (n_bins < 2) throw InvalidArgument("histogram: n_bins must be >= 2");
    if (!(stderr > 0.0)) throw InvalidArgument("histogram: stderr must be > 0");

    auto [min_it, max_it] = std::minmax_element(estimates.begin(), estimates.end());
    double lo = *min_it;
    double hi = *max_it;
    if (hi == lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double width = (hi - lo) / static_cast<double>(n_bins);

    Histogram out;
    std::vector<std::size_t> counts(n_bins, 0);
    for (double v : estimates) {
        auto bin = static_cast<std::size_t>((v - lo) / width);
        counts[std::min(bin, n_bins - 1)]++;
    }
    const double total = static_cast<double>(estimates.size());
    for (std::size_t b = 0; b < n_bins; ++b) {
        out.bin_left.push_back(lo + width * static_cast<double>(b));
        out.bin_right.push_back(b + 1 == n_bins ? hi : lo + width * static_cast<double>(b + 1));
        out.density.push_back(static_cast<double>(counts[b]) / (total * width));
    }

    constexpr std::size_t kOverlayPoints = 201;
    const double x_lo = std::min(lo, alpha - 4.0 * stderr);
    const double x_hi = std::max(hi, alpha + 4.0 * stderr);
    for (std::size_t i = 0; i < kOverlayPoints; ++i) {
        const double x = x_lo + (x_hi - x_lo) * static_cast<double>(i) / static_cast<double>(kOverlayPoints - 1);
        out.overlay_x.push_back(x);
        out.overlay_pdf.push_back(normal_pdf(x, alpha, stderr));
    }
    return out;
}

double ks_statistic(std::span<const double> sample, double mean, double sd) {
    if (sample.empty()) throw InvalidArgument("ks_statistic: empty sample");
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double cdf = 0.5 * std::erfc(-(sorted[i] - mean) / (sd * std::numbers::sqrt2));
        d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
    }
    return d;
}

}  // namespace msfm
