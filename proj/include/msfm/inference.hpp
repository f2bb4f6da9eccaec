#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "msfm/filters.hpp"
#include "msfm/model.hpp"
#include "msfm/simulate.hpp"

namespace msfm {

struct LikelihoodEvaluation {
    double theta = 0.0;
    double loglik = 0.0;
    double score = 0.0;
    double T = 0.0;
};

struct EstimationResult {
    double theta_hat = 0.0;
    bool clamped = false;
    double fisher = 0.0;
    double theoretical_stderr = 0.0;
    double loglik_at_max = 0.0;
};

/// Left-point sum  (sum_k pi_k dY_k - 1/2 sum_k pi_k^2 dt) / Sigma^2.
double discretized_log_likelihood(std::span<const double> pi, std::span<const double> y, double dt,
                                  double Sigma);

/// Reduced-model filter of `obs` at theta: Kalman for linear models, Wonham for Example3.
FilterPath reduced_filter(const ModelSpec& model, double theta, const Path& obs);

/// Reduced log-likelihood of the Y channel of `obs` at theta.
double reduced_log_likelihood(const ModelSpec& model, double theta, const Path& obs);

/// Derivative of reduced_log_likelihood: tangent-filter sum for linear models,
/// central difference (step 1e-4) for Example3.
double score(const ModelSpec& model, double theta, const Path& obs);

LikelihoodEvaluation evaluate_likelihood(const ModelSpec& model, double theta, const Path& obs);

/// (theta, loglik) on `n` equally spaced points of the model's bounds.
std::vector<std::pair<double, double>> likelihood_profile(const ModelSpec& model, const Path& obs,
                                                          std::size_t n);

struct MleOptions {
    std::size_t grid_points = 41;
    double tolerance = 1e-6;
    /// Fill EstimationResult::fisher and theoretical_stderr.
    bool with_fisher = true;
    /// Horizon, step and seed of the numeric Fisher information used for Example3.
    double fisher_T = 2000.0;
    double fisher_dt = 0.02;
    std::uint64_t fisher_seed = 0x0f15e;
};

/// Grid search over the bounds followed by golden-section refinement around the grid
/// argmax. A maximizer on a bound is returned as that bound with clamped = true.
EstimationResult mle(const ModelSpec& model, const Path& obs, const MleOptions& options = {});

/// I = betabar'^2/(2 betabar) + kappa'^2/(2 kappa) - 2 betabar' kappa'/(betabar + kappa).
double fisher_closed(const ReducedLinearModel& reduced, double alpha);

/// Ergodic average (1 / (T Sigma^2)) sum pi_dot_k^2 dt along one reduced path at alpha.
double fisher_numeric(const ModelSpec& model, double alpha, double T, double dt, std::uint64_t seed);

/// Time average of pi_dot^2 / Sigma^2 along a given tangent path.
double fisher_time_average(const TangentPath& tangent, double Sigma);

/// (T I)^{-1/2}.
double theoretical_stderr(double fisher, double T);

/// |betabar'| + |kappa'| > 0 on the grid, and (betabar, kappa) separate every pair of grid
/// points further apart than epsilon.
bool check_linear_identifiability(const ReducedLinearModel& reduced, std::span<const double> grid,
                                  double epsilon);

}  // namespace msfm
