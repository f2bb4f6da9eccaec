#include "msfm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "msfm/error.hpp"

namespace msfm {

bool Path::has(std::string_view name) const {
    return std::any_of(channels.begin(), channels.end(), [&](const auto& c) { return c.first == name; });
}

const std::vector<double>& Path::channel(std::string_view name) const {
    for (const auto& [key, values] : channels)
        if (key == name) return values;
    throw InvalidArgument("path has no channel '" + std::string(name) + "'");
}

std::vector<double>& Path::channel(std::string_view name) {
    for (auto& [key, values] : channels)
        if (key == name) return values;
    throw InvalidArgument("path has no channel '" + std::string(name) + "'");
}

void Path::set_channel(std::string name, std::vector<double> values) {
    for (auto& [key, existing] : channels) {
        if (key == name) {
            existing = std::move(values);
            return;
        }
    }
    channels.emplace_back(std::move(name), std::move(values));
}

void Path::validate() const {
    if (!(dt > 0.0)) throw InvalidArgument("path: dt must be > 0");
    if (n_steps < 1) throw InvalidArgument("path: needs at least one step");
    for (const auto& [key, values] : channels) {
        if (values.size() != size())
            throw InvalidArgument("path: channel '" + key + "' has wrong length");
        for (std::size_t k = 0; k < values.size(); ++k)
            if (!std::isfinite(values[k])) throw InstabilityError("path: channel '" + key + "' is not finite", k);
    }
}

std::size_t grid_steps(double T, double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("dt must be > 0");
    if (!(T >= dt)) throw InvalidArgument("T must be >= dt");
    const double ratio = T / dt;
    const double n = std::round(ratio);
    if (std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio))
        throw InvalidArgument("T/dt must be an integer");
    return static_cast<std::size_t>(n);
}

HiddenStepper::HiddenStepper(const ModelSpec& model, double theta, double dt)
    : model_(model), theta_(theta), dt_(dt) {
    if (model.fast_is_ou()) {
        decay_ = std::exp(-dt / model.delta);
        ou_sd_ = model.fast_sigma * std::sqrt(0.5 * (1.0 - decay_ * decay_));
    } else {
        substeps_ = static_cast<std::size_t>(std::ceil(10.0 * dt / model.delta));
    }
    if (model.slow_is_chain) flip_probability_ = 0.5 * (1.0 - std::exp(-2.0 * theta * dt));
}

double HiddenStepper::advance_fast(double x, double u, NormalSource& noise) const {
    if (model_.fast_is_ou()) {
        const double c = model_.ou_center(u, theta_);
        return c + (x - c) * decay_ + ou_sd_ * noise();
    }
    const double h = dt_ / static_cast<double>(substeps_);
    const double drift_scale = h / model_.delta;
    const double noise_scale = std::sqrt(h / model_.delta);
    for (std::size_t j = 0; j < substeps_; ++j)
        x += model_.b(x, u, theta_) * drift_scale + model_.sigma(x, u, theta_) * noise_scale * noise();
    return x;
}

double HiddenStepper::advance_slow(double x, double u, NormalSource& noise) const {
    return u + model_.g(x, u, theta_) * dt_ + model_.tau(x, u, theta_) * std::sqrt(dt_) * noise();
}

double HiddenStepper::advance_chain(double u, Engine& engine) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    return unif(engine) < flip_probability_ ? 1.0 - u : u;
}

std::pair<double, double> draw_initial_state(const ModelSpec& model, double theta, Engine& engine) {
    std::normal_distribution<double> normal;
    double u0 = 0.0;
    if (model.slow_is_chain) {
        u0 = static_cast<double>(engine() >> 63);
    } else if (model.tag == ExampleTag::Example1 || model.tag == ExampleTag::Example2 || model.linear) {
        const ReducedLinearModel reduced = reduce(model);
        const double a = reduced.abar(theta);
        if (a != 0.0) {
            const double var = model.Sigma * model.Sigma * reduced.zeta(theta) / (a * a);
            u0 = std::sqrt(var) * normal(engine);
        }
    }
    double x0 = 0.0;
    if (model.invariant) {
        const GaussianMeasure mu = model.invariant(u0, theta);
        x0 = mu.mean + mu.sd() * normal(engine);
    }
    return {x0, u0};
}

namespace {

// Exact holding-time chain sampled onto the grid.
std::vector<double> chain_on_grid(double theta, double dt, std::size_t n, double u0, Engine& engine) {
    std::vector<double> u(n + 1, u0);
    if (theta <= 0.0) return u;
    std::exponential_distribution<double> holding(theta);
    double state = u0;
    double next_jump = holding(engine);
    for (std::size_t k = 1; k <= n; ++k) {
        const double t = dt * static_cast<double>(k);
        while (next_jump <= t) {
            state = 1.0 - state;
            next_jump += holding(engine);
        }
        u[k] = state;
    }
    return u;
}

}  // namespace

Path simulate_multiscale(const ModelSpec& model, double theta, double T, double dt, std::uint64_t seed,
                         const InitialState& init) {
    model.validate();
    const std::size_t n = grid_steps(T, dt);

    Engine init_engine = make_engine(seed, Stream::Initial);
    auto [x0, u0] = draw_initial_state(model, theta, init_engine);
    if (init.u0) u0 = *init.u0;
    if (init.x0) x0 = *init.x0;

    NormalSource obs_noise(seed, Stream::Observation);
    NormalSource slow_noise(seed, Stream::Slow);
    NormalSource fast_noise(seed, Stream::Fast);
    const HiddenStepper stepper(model, theta, dt);

    std::vector<double> y(n + 1), u(n + 1), x(n + 1);
    y[0] = 0.0;
    u[0] = u0;
    x[0] = x0;
    if (model.slow_is_chain) {
        Engine chain_engine = make_engine(seed, Stream::Chain);
        u = chain_on_grid(theta, dt, n, u0, chain_engine);
    }

    const double obs_scale = model.Sigma * std::sqrt(dt);
    for (std::size_t k = 0; k < n; ++k) {
        y[k + 1] = y[k] + model.h(x[k], u[k], theta) * dt + obs_scale * obs_noise();
        if (!model.slow_is_chain) u[k + 1] = stepper.advance_slow(x[k], u[k], slow_noise);
        x[k + 1] = stepper.advance_fast(x[k], u[k], fast_noise);
        if (!std::isfinite(y[k + 1]) || !std::isfinite(u[k + 1]) || !std::isfinite(x[k + 1]))
            throw InstabilityError("simulate_multiscale: non-finite state", k + 1);
    }

    Path path;
    path.dt = dt;
    path.n_steps = n;
    path.seed = seed;
    path.delta = model.delta;
    path.set_channel("Y", std::move(y));
    path.set_channel("U", std::move(u));
    path.set_channel("X", std::move(x));
    return path;
}

Path simulate_reduced(const ReducedLinearModel& reduced, double theta, double T, double dt,
                      std::uint64_t seed, const InitialState& init) {
    const std::size_t n = grid_steps(T, dt);
    const double a = reduced.abar(theta);
    const double beta = reduced.betabar(theta);
    const double gamma = reduced.gamma(theta);
    if (!(beta > 0.0)) throw InvalidArgument("simulate_reduced: betabar must be > 0");

    Engine init_engine = make_engine(seed, Stream::Initial);
    double u0 = 0.0;
    if (a != 0.0) {
        std::normal_distribution<double> normal;
        const double var = reduced.Sigma * reduced.Sigma * reduced.zeta(theta) / (a * a);
        u0 = std::sqrt(var) * normal(init_engine);
    }
    if (init.u0) u0 = *init.u0;

    NormalSource obs_noise(seed, Stream::Observation);
    NormalSource slow_noise(seed, Stream::Slow);
    const double decay = std::exp(-beta * dt);
    const double ou_sd = std::abs(gamma) * std::sqrt((1.0 - decay * decay) / (2.0 * beta));
    const double obs_scale = reduced.Sigma * std::sqrt(dt);

    std::vector<double> y(n + 1), u(n + 1);
    y[0] = 0.0;
    u[0] = u0;
    for (std::size_t k = 0; k < n; ++k) {
        y[k + 1] = y[k] + a * u[k] * dt + obs_scale * obs_noise();
        u[k + 1] = u[k] * decay + ou_sd * slow_noise();
        if (!std::isfinite(y[k + 1]) || !std::isfinite(u[k + 1]))
            throw InstabilityError("simulate_reduced: non-finite state", k + 1);
    }

    Path path;
    path.dt = dt;
    path.n_steps = n;
    path.seed = seed;
    path.set_channel("Y", std::move(y));
    path.set_channel("U", std::move(u));
    return path;
}

Path simulate_ctmc(double theta, double T, double dt, std::uint64_t seed, std::optional<double> u0) {
    if (!(theta >= 0.0)) throw InvalidArgument("simulate_ctmc: theta must be >= 0");
    const std::size_t n = grid_steps(T, dt);
    Engine init_engine = make_engine(seed, Stream::Initial);
    const double start = u0.value_or(static_cast<double>(init_engine() >> 63));
    if (start != 0.0 && start != 1.0) throw InvalidArgument("simulate_ctmc: u0 must be 0 or 1");
    Engine chain_engine = make_engine(seed, Stream::Chain);

    Path path;
    path.dt = dt;
    path.n_steps = n;
    path.seed = seed;
    path.set_channel("U", chain_on_grid(theta, dt, n, start, chain_engine));
    return path;
}

Path simulate_reduced_chain(double theta, double Sigma, double T, double dt, std::uint64_t seed) {
    if (!(Sigma > 0.0)) throw InvalidArgument("simulate_reduced_chain: Sigma must be > 0");
    Path path = simulate_ctmc(theta, T, dt, seed);
    const auto& u = path.channel("U");
    NormalSource obs_noise(seed, Stream::Observation);
    const double obs_scale = Sigma * std::sqrt(dt);
    std::vector<double> y(path.size());
    y[0] = 0.0;
    for (std::size_t k = 0; k < path.n_steps; ++k) y[k + 1] = y[k] + u[k] * dt + obs_scale * obs_noise();
    path.channels.insert(path.channels.begin(), {"Y", std::move(y)});
    return path;
}

}  // namespace msfm
