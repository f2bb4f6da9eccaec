#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "msfm/model.hpp"
#include "msfm/simulate.hpp"

namespace msfm {

/// Time discretization of the Kalman-Bucy equations.
///  - Euler: explicit Euler steps of the mean SDE and the Riccati ODE.
///  - SampledData: the exact conditional-mean recursion for the reduced model observed
///    through left-point increments dY_k = abar U_k dt + Sigma dW_k with exact OU
///    transitions for U. Both converge to the continuous filter as dt -> 0; only the
///    second keeps the innovations a martingale difference at finite dt.
enum class Discretization { Euler, SampledData };

/// Filter output on the observation grid. pi_h, sigma_hat and ess have one entry per grid
/// point; nu has one innovation increment (dY - pi_h dt) / Sigma per interval.
/// sigma_hat holds the conditional variance of U (Kalman and Wonham filters), ess the
/// effective sample size (particle filter).
struct FilterPath {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<double> pi_h;
    std::vector<double> sigma_hat;
    std::vector<double> nu;
    std::vector<double> ess;
    Discretization scheme = Discretization::Euler;

    std::size_t size() const { return pi_h.size(); }
};

/// theta-derivative of the filtered drift.
struct TangentPath {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<double> pi_dot;
};

struct StationaryGain {
    double kappa = 0.0;
    double zeta = 0.0;
    double sigma_hat_inf = 0.0;
};

/// Stationary solution of the Riccati equation. Throws InvalidArgument if abar(theta) == 0.
StationaryGain stationary_gain(const ReducedLinearModel& reduced, double theta);

/// Stationary one-step recursion pi_{k+1} = decay * pi_k + gain * dY_k of the
/// SampledData filter, with theta-derivatives of its coefficients.
struct SampledGain {
    double decay = 0.0;
    double gain = 0.0;
    double variance = 0.0;
    double d_decay = 0.0;
    double d_gain = 0.0;
};

SampledGain sampled_stationary_gain(const ReducedLinearModel& reduced, double theta, double dt);

/// Right-hand side of the Riccati equation for the conditional variance.
double riccati_rhs(const ReducedLinearModel& reduced, double theta, double sigma_hat);

struct KalmanOptions {
    /// Defaults to the stationary variance.
    std::optional<double> sigma_hat0;
    double u_hat0 = 0.0;
    Discretization scheme = Discretization::Euler;
};

/// Kalman-Bucy filter on the Y channel of `obs`.
FilterPath kalman_bucy(const ReducedLinearModel& reduced, double theta, const Path& obs,
                       const KalmanOptions& options = {});

/// Derivative of the stationary filter in theta, pi_dot(0) = 0. For an Euler filter this
/// is the Euler step of  d pi_dot = (-betabar' pi - kappa pi_dot) dt + zeta' Sigma d nu;
/// for a SampledData filter it is the exact derivative of that recursion.
TangentPath tangent_filter(const ReducedLinearModel& reduced, double theta, const Path& obs,
                           const FilterPath& filter);

struct WonhamOptions {
    double p0 = 0.5;
    /// Euler: clamped Euler steps of the Wonham SDE. SampledData: exact forward recursion
    /// of the chain observed through dY_k = U_k dt + Sigma dW_k (no clamping needed).
    Discretization scheme = Discretization::Euler;
    /// Drop the observation term (the Sigma -> infinity limit).
    bool use_observations = true;
};

inline constexpr double kWonhamClamp = 1e-12;

/// P(U_t = 1 | Y) for the symmetric 2-state chain with intensity theta observed through
/// dY = U dt + Sigma dW. The Euler scheme clamps p to [1e-12, 1 - 1e-12].
FilterPath wonham_filter(double theta, double Sigma, const Path& obs, const WonhamOptions& options = {});

struct ParticleFilterResult {
    FilterPath path;
    /// Posterior standard deviation of h at every grid point.
    std::vector<double> pi_h_sd;
    /// Log of the running product of mean unnormalized weights.
    double log_evidence = 0.0;
};

inline constexpr std::size_t kDefaultParticles = 1000;

/// Bootstrap particle filter for the full model: particles move with the simulator's
/// transition, are weighted by exp((h dY - h^2 dt / 2) / Sigma^2) and resampled
/// systematically every step. pi_h[k] is the posterior mean given Y up to t_k.
ParticleFilterResult particle_filter(const ModelSpec& model, double theta, const Path& obs,
                                     std::size_t n_particles, std::uint64_t seed);

}  // namespace msfm
