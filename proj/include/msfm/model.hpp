#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace msfm {

enum class ExampleTag { Example1, Example2, Example3, Custom };

std::string_view to_string(ExampleTag tag);
/// Accepts "example1", "example2", "example3", "custom". Throws InvalidArgument otherwise.
ExampleTag parse_example_tag(std::string_view name);

struct ThetaBounds {
    double lo = 0.0;
    double hi = 1.0;

    bool contains(double theta) const { return theta >= lo && theta <= hi; }
    double width() const { return hi - lo; }
};

struct GaussianMeasure {
    double mean = 0.0;
    double variance = 0.0;

    double sd() const;
};

/// Coefficient of the full system, evaluated at fast state x, slow state u and parameter theta.
using StateFn = std::function<double(double x, double u, double theta)>;
using ParamFn = std::function<double(double theta)>;
using ScalarFn = std::function<double(double)>;

/// Separable linear-in-u structure of the observation and slow drift:
///   h = a(theta) lambda(x) u,   g = -beta(theta) q(x) u,   tau = gamma(theta).
/// Its presence lets reduce() produce a ReducedLinearModel.
struct LinearStructure {
    ParamFn a;
    ParamFn beta;
    ParamFn gamma;
    ScalarFn lambda;
    ScalarFn q;
};

/// Full slow-fast system
///   dY = h(X,U) dt + Sigma dW
///   dU = g(X,U) dt + tau(X,U) dV        (or a 2-state chain for Example3)
///   dX = b(X,U)/delta dt + sigma(X,U)/sqrt(delta) dB
struct ModelSpec {
    ExampleTag tag = ExampleTag::Custom;
    StateFn h;
    StateFn g;
    StateFn tau;
    StateFn b;
    StateFn sigma;

    /// When set, b = ou_center(u, theta) - x and sigma == fast_sigma, so the
    /// fast component admits exact Ornstein-Uhlenbeck transitions.
    std::function<double(double u, double theta)> ou_center;
    double fast_sigma = 0.0;

    double Sigma = 0.1;
    double delta = 0.01;
    ThetaBounds bounds{-1.0, 1.0};

    /// U is the symmetric 2-state chain on {0,1} with jump intensity theta.
    bool slow_is_chain = false;

    std::optional<LinearStructure> linear;

    /// Invariant measure of the fast component (delta = 1, u frozen). Optional for
    /// Custom models; when missing an empirical measure is built by simulation.
    std::function<GaussianMeasure(double u, double theta)> invariant;

    bool fast_is_ou() const { return static_cast<bool>(ou_center); }

    /// Throws InvalidArgument on Sigma <= 0, delta <= 0, lo >= hi or missing coefficients.
    void validate() const;
};

struct ExampleParams {
    double Sigma = 0.1;
    double sigma = 0.1;
    double delta = 0.01;
    std::optional<ThetaBounds> bounds;
};

/// Default parameter interval used when ExampleParams::bounds is unset.
ThetaBounds default_bounds(ExampleTag tag);

ModelSpec make_example(ExampleTag tag, const ExampleParams& params = {});

/// Linear-Gaussian model (lambda = q = 1, fast component inert) written as a ModelSpec.
/// abar, betabar, gamma are taken as functions of theta.
ModelSpec make_linear_gaussian(ParamFn abar, ParamFn betabar, ParamFn gamma, double Sigma,
                               ThetaBounds bounds);

/// Stationary law N(theta, sigma^2/2) of dX = (theta - X) dt + sigma dB.
GaussianMeasure invariant_measure_ou(double theta, double sigma);

/// u -> integral of f(x, u) mu(dx) by adaptive Gauss-Hermite quadrature. The returned
/// callable throws QuadratureError for integrands the rule cannot settle.
ScalarFn average_coefficient(std::function<double(double x, double u)> f, GaussianMeasure mu);

/// Sample-based stand-in for the invariant measure of a non-OU fast component:
/// a delta = 1 Euler run of length 10000 (dt = 0.05) with the first 10% discarded.
struct EmpiricalMeasure {
    std::vector<double> samples;

    double expectation(const std::function<double(double)>& f) const;
};

EmpiricalMeasure empirical_invariant_measure(const StateFn& b, const StateFn& sigma, double u,
                                             double theta, std::uint64_t seed);

/// Homogenized linear model dY = abar U dt + Sigma dW, dU = -betabar U dt + gamma dV.
struct ReducedLinearModel {
    ParamFn abar;
    ParamFn betabar;
    ParamFn gamma;
    ParamFn d_abar;
    ParamFn d_betabar;
    ParamFn d_gamma;
    double Sigma = 1.0;

    /// sqrt(betabar^2 + gamma^2 abar^2 / Sigma^2)
    double kappa(double theta) const;
    /// kappa - betabar, the stationary gain factor.
    double zeta(double theta) const;
    double d_kappa(double theta) const;
    double d_zeta(double theta) const;
};

/// Step 1e-5 * max(1, |theta|) central difference.
double central_difference(const ParamFn& f, double theta);

/// Reduced model whose derivatives come from central differences.
ReducedLinearModel make_reduced(ParamFn abar, ParamFn betabar, ParamFn gamma, double Sigma);

/// Averages the model over the invariant measure of its fast component. Example1/2
/// use closed forms; Custom models need a LinearStructure. Example3 is refused
/// (its reduction is a Markov chain, handled by wonham_filter).
ReducedLinearModel reduce(const ModelSpec& model);

}  // namespace msfm
