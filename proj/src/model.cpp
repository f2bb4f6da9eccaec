#include "msfm/model.hpp"

#include <cmath>
#include <numeric>
#include <utility>

#include "msfm/error.hpp"
#include "msfm/quadrature.hpp"
#include "msfm/rng.hpp"

namespace msfm {

std::string_view to_string(ExampleTag tag) {
    switch (tag) {
        case ExampleTag::Example1: return "example1";
        case ExampleTag::Example2: return "example2";
        case ExampleTag::Example3: return "example3";
        case ExampleTag::Custom: return "custom";
    }
    return "custom";
}

ExampleTag parse_example_tag(std::string_view name) {
    if (name == "example1") return ExampleTag::Example1;
    if (name == "example2") return ExampleTag::Example2;
    if (name == "example3") return ExampleTag::Example3;
    if (name == "custom") return ExampleTag::Custom;
    throw InvalidArgument("unknown example '" + std::string(name) + "'");
}

double GaussianMeasure::sd() const { return std::sqrt(variance); }

void ModelSpec::validate() const {
    if (!(Sigma > 0.0)) throw InvalidArgument("model: Sigma must be > 0");
    if (!(delta > 0.0)) throw InvalidArgument("model: delta must be > 0");
    if (!(bounds.lo < bounds.hi)) throw InvalidArgument("model: theta bounds need lo < hi");
    if (!h) throw InvalidArgument("model: missing observation drift h");
    if (!slow_is_chain && (!g || !tau)) throw InvalidArgument("model: missing slow coefficients");
    if (!fast_is_ou() && (!b || !sigma)) throw InvalidArgument("model: missing fast coefficients");
    if (fast_sigma < 0.0) throw InvalidArgument("model: fast sigma must be >= 0");
}

ThetaBounds default_bounds(ExampleTag tag) {
    switch (tag) {
        case ExampleTag::Example1: return {-1.0, 2.0};
        case ExampleTag::Example2: return {-1.0, 3.0};
        case ExampleTag::Example3: return {0.05, 5.0};
        case ExampleTag::Custom: break;
    }
    return {-1.0, 1.0};
}

ModelSpec make_example(ExampleTag tag, const ExampleParams& params) {
    if (tag == ExampleTag::Custom) throw InvalidArgument("make_example: custom models are built by hand");

    ModelSpec m;
    m.tag = tag;
    m.Sigma = params.Sigma;
    m.delta = params.delta;
    m.bounds = params.bounds.value_or(default_bounds(tag));
    m.fast_sigma = params.sigma;

    const double s = params.sigma;
    m.sigma = [s](double, double, double) { return s; };

    if (tag == ExampleTag::Example3) {
        m.slow_is_chain = true;
        m.h = [](double x, double, double) { return x; };
        m.b = [](double x, double u, double) { return u - x; };
        m.ou_center = [](double u, double) { return u; };
        m.invariant = [s](double u, double) { return invariant_measure_ou(u, s); };
        m.validate();
        return m;
    }

    m.b = [](double x, double, double theta) { return theta - x; };
    m.ou_center = [](double, double theta) { return theta; };
    m.invariant = [s](double, double theta) { return invariant_measure_ou(theta, s); };
    m.tau = [](double, double, double) { return 1.0; };

    LinearStructure lin;
    lin.a = [](double) { return 1.0; };
    lin.beta = [](double) { return 1.0; };
    lin.gamma = [](double) { return 1.0; };
    if (tag == ExampleTag::Example1) {
        m.h = [](double x, double u, double) { return std::exp(x) * u; };
        m.g = [](double, double u, double) { return -u; };
        lin.lambda = [](double x) { return std::exp(x); };
        lin.q = [](double) { return 1.0; };
    } else {
        m.h = [](double, double u, double) { return u; };
        m.g = [](double x, double u, double) { return -std::exp(x) * u; };
        lin.lambda = [](double) { return 1.0; };
        lin.q = [](double x) { return std::exp(x); };
    }
    m.linear = std::move(lin);
    m.validate();
    return m;
}

ModelSpec make_linear_gaussian(ParamFn abar, ParamFn betabar, ParamFn gamma, double Sigma,
                               ThetaBounds bounds) {
    ModelSpec m;
    m.tag = ExampleTag::Custom;
    m.Sigma = Sigma;
    m.delta = 1.0;
    m.bounds = bounds;
    m.h = [abar](double, double u, double theta) { return abar(theta) * u; };
    m.g = [betabar](double, double u, double theta) { return -betabar(theta) * u; };
    m.tau = [gamma](double, double, double theta) { return gamma(theta); };
    m.b = [](double x, double, double) { return -x; };
    m.sigma = [](double, double, double) { return 0.0; };
    m.ou_center = [](double, double) { return 0.0; };
    m.fast_sigma = 0.0;
    m.invariant = [](double, double) { return GaussianMeasure{0.0, 0.0}; };
    m.linear = LinearStructure{abar, betabar, gamma, [](double) { return 1.0; },
                               [](double) { return 1.0; }};
    m.validate();
    return m;
}

GaussianMeasure invariant_measure_ou(double theta, double sigma) {
    if (!(sigma >= 0.0)) throw InvalidArgument("invariant_measure_ou: sigma must be >= 0");
    return {theta, 0.5 * sigma * sigma};
}

ScalarFn average_coefficient(std::function<double(double, double)> f, GaussianMeasure mu) {
    if (!(mu.variance >= 0.0)) throw InvalidArgument("average_coefficient: negative variance");
    return [f = std::move(f), mu](double u) {
        return gaussian_expectation([&](double x) { return f(x, u); }, mu.mean, mu.sd()).value;
    };
}

double EmpiricalMeasure::expectation(const std::function<double(double)>& f) const {
    if (samples.empty()) throw InvalidArgument("empirical measure has no samples");
    double sum = 0.0;
    for (double x : samples) sum += f(x);
    return sum / static_cast<double>(samples.size());
}

EmpiricalMeasure empirical_invariant_measure(const StateFn& b, const StateFn& sigma, double u,
                                             double theta, std::uint64_t seed) {
    constexpr double kLength = 10000.0;
    constexpr double kStep = 0.05;
    const auto n = static_cast<std::size_t>(kLength / kStep);
    const std::size_t burn_in = n / 10;

    NormalSource noise(seed, Stream::Fast);
    EmpiricalMeasure out;
    out.samples.reserve(n - burn_in);
    const double sq = std::sqrt(kStep);
    double x = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        x += b(x, u, theta) * kStep + sigma(x, u, theta) * sq * noise();
        if (!std::isfinite(x)) throw InstabilityError("empirical invariant measure diverged", k);
        if (k >= burn_in) out.samples.push_back(x);
    }
    return out;
}

double ReducedLinearModel::kappa(double theta) const {
    const double bb = betabar(theta);
    const double ga = gamma(theta) * abar(theta) / Sigma;
    return std::sqrt(bb * bb + ga * ga);
}

double ReducedLinearModel::zeta(double theta) const { return kappa(theta) - betabar(theta); }

double ReducedLinearModel::d_kappa(double theta) const {
    const double a = abar(theta);
    const double bb = betabar(theta);
    const double g = gamma(theta);
    const double s2 = Sigma * Sigma;
    const double num = bb * d_betabar(theta) + (g * d_gamma(theta) * a * a + g * g * a * d_abar(theta)) / s2;
    return num / kappa(theta);
}

double ReducedLinearModel::d_zeta(double theta) const { return d_kappa(theta) - d_betabar(theta); }

double central_difference(const ParamFn& f, double theta) {
    const double step = 1e-5 * std::max(1.0, std::abs(theta));
    return (f(theta + step) - f(theta - step)) / (2.0 * step);
}

ReducedLinearModel make_reduced(ParamFn abar, ParamFn betabar, ParamFn gamma, double Sigma) {
    ReducedLinearModel r;
    r.d_abar = [abar](double th) { return central_difference(abar, th); };
    r.d_betabar = [betabar](double th) { return central_difference(betabar, th); };
    r.d_gamma = [gamma](double th) { return central_difference(gamma, th); };
    r.abar = std::move(abar);
    r.betabar = std::move(betabar);
    r.gamma = std::move(gamma);
    r.Sigma = Sigma;
    return r;
}

namespace {

// Averaged lambda or q for a Custom linear model.
ParamFn averaged_factor(const ModelSpec& model, ScalarFn factor) {
    if (model.invariant) {
        auto inv = model.invariant;
        return [inv, factor](double theta) {
            const GaussianMeasure mu = inv(0.0, theta);
            return gaussian_expectation(factor, mu.mean, mu.sd()).value;
        };
    }
    // Fixed seed: common random numbers keep the averaged factor smooth in theta.
    constexpr std::uint64_t kEmpiricalSeed = 0x5eed;
    auto b = model.b;
    auto sigma = model.sigma;
    return [b, sigma, factor](double theta) {
        return empirical_invariant_measure(b, sigma, 0.0, theta, kEmpiricalSeed).expectation(factor);
    };
}

}  // namespace

ReducedLinearModel reduce(const ModelSpec& model) {
    model.validate();
    const double Sigma = model.Sigma;
    const double quarter_s2 = 0.25 * model.fast_sigma * model.fast_sigma;

    switch (model.tag) {
        case ExampleTag::Example1: {
            ReducedLinearModel r;
            r.abar = [quarter_s2](double th) { return std::exp(th + quarter_s2); };
            r.d_abar = r.abar;
            r.betabar = [](double) { return 1.0; };
            r.d_betabar = [](double) { return 0.0; };
            r.gamma = [](double) { return 1.0; };
            r.d_gamma = [](double) { return 0.0; };
            r.Sigma = Sigma;
            return r;
        }
        case ExampleTag::Example2: {
            ReducedLinearModel r;
            r.abar = [](double) { return 1.0; };
            r.d_abar = [](double) { return 0.0; };
            r.betabar = [quarter_s2](double th) { return std::exp(th + quarter_s2); };
            r.d_betabar = r.betabar;
            r.gamma = [](double) { return 1.0; };
            r.d_gamma = [](double) { return 0.0; };
            r.Sigma = Sigma;
            return r;
        }
        case ExampleTag::Example3:
            throw InvalidArgument("reduce: example3 reduces to a Markov chain, use wonham_filter");
        case ExampleTag::Custom: break;
    }

    if (!model.linear) throw InvalidArgument("reduce: custom model has no linear structure");
    const LinearStructure lin = *model.linear;
    const ParamFn lambda_bar = averaged_factor(model, lin.lambda);
    const ParamFn q_bar = averaged_factor(model, lin.q);
    return make_reduced([a = lin.a, lambda_bar](double th) { return a(th) * lambda_bar(th); },
                        [beta = lin.beta, q_bar](double th) { return beta(th) * q_bar(th); },
                        lin.gamma, Sigma);
}

}  // namespace msfm
