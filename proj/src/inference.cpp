#include "msfm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "msfm/error.hpp"

namespace msfm {
namespace {

constexpr double kChainScoreStep = 1e-4;
constexpr double kInvPhi = 0.6180339887498949;

KalmanOptions likelihood_filter_options() {
    KalmanOptions options;
    options.scheme = Discretization::SampledData;
    return options;
}

WonhamOptions likelihood_wonham_options() {
    WonhamOptions options;
    options.scheme = Discretization::SampledData;
    return options;
}

double safe_loglik(const ModelSpec& model, double theta, const Path& obs) {
    try {
        const double v = reduced_log_likelihood(model, theta, obs);
        return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    } catch (const InstabilityError&) {
        return -std::numeric_limits<double>::infinity();
    }
}

}  // namespace

double discretized_log_likelihood(std::span<const double> pi, std::span<const double> y, double dt,
                                  double Sigma) {
    if (y.size() < 2 || pi.size() < y.size() - 1)
        throw InvalidArgument("log-likelihood: filter shorter than observations");
    double cross = 0.0;
    double square = 0.0;
    for (std::size_t k = 0; k + 1 < y.size(); ++k) {
        cross += pi[k] * (y[k + 1] - y[k]);
        square += pi[k] * pi[k];
    }
    return (cross - 0.5 * square * dt) / (Sigma * Sigma);
}

FilterPath reduced_filter(const ModelSpec& model, double theta, const Path& obs) {
    if (model.slow_is_chain) return wonham_filter(theta, model.Sigma, obs, likelihood_wonham_options());
    return kalman_bucy(reduce(model), theta, obs, likelihood_filter_options());
}

double reduced_log_likelihood(const ModelSpec& model, double theta, const Path& obs) {
    const FilterPath filter = reduced_filter(model, theta, obs);
    return discretized_log_likelihood(filter.pi_h, obs.channel("Y"), obs.dt, model.Sigma);
}

double score(const ModelSpec& model, double theta, const Path& obs) {
    if (model.slow_is_chain) {
        return (reduced_log_likelihood(model, theta + kChainScoreStep, obs) -
                reduced_log_likelihood(model, theta - kChainScoreStep, obs)) /
               (2.0 * kChainScoreStep);
    }
    const ReducedLinearModel reduced = reduce(model);
    const FilterPath filter = kalman_bucy(reduced, theta, obs, likelihood_filter_options());
    const TangentPath tangent = tangent_filter(reduced, theta, obs, filter);
    const auto& y = obs.channel("Y");
    double sum = 0.0;
    for (std::size_t k = 0; k < obs.n_steps; ++k)
        sum += tangent.pi_dot[k] * ((y[k + 1] - y[k]) - filter.pi_h[k] * obs.dt);
    return sum / (model.Sigma * model.Sigma);
}

LikelihoodEvaluation evaluate_likelihood(const ModelSpec& model, double theta, const Path& obs) {
    return {theta, reduced_log_likelihood(model, theta, obs), score(model, theta, obs), obs.horizon()};
}

std::vector<std::pair<double, double>> likelihood_profile(const ModelSpec& model, const Path& obs,
                                                          std::size_t n) {
    if (n < 2) throw InvalidArgument("likelihood_profile: need at least 2 points");
    std::vector<std::pair<double, double>> out;
    out.reserve(n);
    const double step = model.bounds.width() / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = i + 1 == n ? model.bounds.hi : model.bounds.lo + step * static_cast<double>(i);
        out.emplace_back(theta, safe_loglik(model, theta, obs));
    }
    return out;
}

EstimationResult mle(const ModelSpec& model, const Path& obs, const MleOptions& options) {
    model.validate();
    if (obs.n_steps < 1) throw InvalidArgument("mle: empty observation path");
    if (options.grid_points < 3) throw InvalidArgument("mle: grid needs at least 3 points");

    const auto profile = likelihood_profile(model, obs, options.grid_points);
    const auto best = std::max_element(profile.begin(), profile.end(),
                                       [](const auto& l, const auto& r) { return l.second < r.second; });
    if (!std::isfinite(best->second))
        throw Error("mle: likelihood is non-finite on the whole grid; model and path do not match");

    const auto i = static_cast<std::size_t>(best - profile.begin());
    double lo = profile[i == 0 ? 0 : i - 1].first;
    double hi = profile[std::min(i + 1, profile.size() - 1)].first;

    // Golden-section search for the maximum on [lo, hi].
    double c = hi - kInvPhi * (hi - lo);
    double d = lo + kInvPhi * (hi - lo);
    double fc = safe_loglik(model, c, obs);
    double fd = safe_loglik(model, d, obs);
    while (hi - lo > options.tolerance) {
        if (fc >= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - kInvPhi * (hi - lo);
            fc = safe_loglik(model, c, obs);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + kInvPhi * (hi - lo);
            fd = safe_loglik(model, d, obs);
        }
    }

    EstimationResult result;
    const ThetaBounds& bounds = model.bounds;
    if (lo - bounds.lo <= options.tolerance) {
        result.theta_hat = bounds.lo;
        result.clamped = true;
    } else if (bounds.hi - hi <= options.tolerance) {
        result.theta_hat = bounds.hi;
        result.clamped = true;
    } else {
        // Settle the score root inside the final bracket; function values alone cannot
        // resolve the maximizer below ~1e-6.
        double a = lo, b = hi;
        double sa = score(model, a, obs);
        const double sb = score(model, b, obs);
        result.theta_hat = 0.5 * (lo + hi);
        if (sa > 0.0 && sb < 0.0) {
            for (int it = 0; it < 60 && b - a > 1e-14 * std::max(1.0, std::abs(a)); ++it) {
                const double m = 0.5 * (a + b);
                const double sm = score(model, m, obs);
                if (sm == 0.0) {
                    a = b = m;
                    break;
                }
                if (sm > 0.0) {
                    a = m;
                    sa = sm;
                } else {
                    b = m;
                }
            }
            result.theta_hat = 0.5 * (a + b);
        }
    }
    result.loglik_at_max = reduced_log_likelihood(model, result.theta_hat, obs);

    if (options.with_fisher) {
        if (model.slow_is_chain) {
            result.fisher = fisher_numeric(model, result.theta_hat, options.fisher_T, options.fisher_dt,
                                           options.fisher_seed);
        } else {
            result.fisher = fisher_closed(reduce(model), result.theta_hat);
        }
        result.theoretical_stderr = result.fisher > 0.0 ? theoretical_stderr(result.fisher, obs.horizon())
                                                        : std::numeric_limits<double>::infinity();
    }
    return result;
}

double fisher_closed(const ReducedLinearModel& reduced, double alpha) {
    const double kappa = reduced.kappa(alpha);
    if (!(kappa > 0.0)) throw InvalidArgument("fisher_closed: kappa is zero");
    const double beta = reduced.betabar(alpha);
    const double d_beta = reduced.d_betabar(alpha);
    const double d_kappa = reduced.d_kappa(alpha);
    return d_beta * d_beta / (2.0 * beta) + d_kappa * d_kappa / (2.0 * kappa) -
           2.0 * d_beta * d_kappa / (beta + kappa);
}

double fisher_time_average(const TangentPath& tangent, double Sigma) {
    if (tangent.pi_dot.size() < 2) throw InvalidArgument("fisher_time_average: path too short");
    double sum = 0.0;
    const std::size_t n = tangent.pi_dot.size() - 1;
    for (std::size_t k = 0; k < n; ++k) sum += tangent.pi_dot[k] * tangent.pi_dot[k];
    return sum / (static_cast<double>(n) * Sigma * Sigma);
}

double fisher_numeric(const ModelSpec& model, double alpha, double T, double dt, std::uint64_t seed) {
    if (T < 100.0) throw InvalidArgument("fisher_numeric: T must be >= 100 for the ergodic average");
    model.validate();
    if (model.slow_is_chain) {
        const Path path = simulate_reduced_chain(alpha, model.Sigma, T, dt, seed);
        const double h = kChainScoreStep;
        const FilterPath up = wonham_filter(alpha + h, model.Sigma, path, likelihood_wonham_options());
        const FilterPath down =
            wonham_filter(std::max(0.0, alpha - h), model.Sigma, path, likelihood_wonham_options());
        const double width = alpha + h - std::max(0.0, alpha - h);
        TangentPath tangent;
        tangent.dt = dt;
        tangent.pi_dot.resize(path.size());
        for (std::size_t k = 0; k < path.size(); ++k) tangent.pi_dot[k] = (up.pi_h[k] - down.pi_h[k]) / width;
        return fisher_time_average(tangent, model.Sigma);
    }
    const ReducedLinearModel reduced = reduce(model);
    const Path path = simulate_reduced(reduced, alpha, T, dt, seed);
    const FilterPath filter = kalman_bucy(reduced, alpha, path, likelihood_filter_options());
    return fisher_time_average(tangent_filter(reduced, alpha, path, filter), model.Sigma);
}

double theoretical_stderr(double fisher, double T) {
    if (!(fisher > 0.0)) throw InvalidArgument("theoretical_stderr: Fisher information must be > 0");
    if (!(T > 0.0)) throw InvalidArgument("theoretical_stderr: T must be > 0");
    return 1.0 / std::sqrt(T * fisher);
}

bool check_linear_identifiability(const ReducedLinearModel& reduced, std::span<const double> grid,
                                  double epsilon) {
    if (!(epsilon > 0.0)) throw InvalidArgument("identifiability: epsilon must be > 0");
    std::vector<double> beta(grid.size()), kappa(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double th = grid[i];
        if (!(std::abs(reduced.d_betabar(th)) + std::abs(reduced.d_kappa(th)) > 0.0)) return false;
        beta[i] = reduced.betabar(th);
        kappa[i] = reduced.kappa(th);
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t j = i + 1; j < grid.size(); ++j) {
            if (std::abs(grid[i] - grid[j]) <= epsilon) continue;
            if (!(std::abs(beta[i] - beta[j]) + std::abs(kappa[i] - kappa[j]) > 0.0)) return false;
        }
    }
    return true;
}

}  // namespace msfm
