#include "msfm/filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "msfm/error.hpp"
#include "msfm/rng.hpp"

namespace msfm {

StationaryGain stationary_gain(const ReducedLinearModel& reduced, double theta) {
    const double a = reduced.abar(theta);
    if (a == 0.0) throw InvalidArgument("stationary_gain: abar is zero, observation gain is not identifiable");
    StationaryGain gain;
    gain.kappa = reduced.kappa(theta);
    gain.zeta = gain.kappa - reduced.betabar(theta);
    gain.sigma_hat_inf = reduced.Sigma * reduced.Sigma * gain.zeta / (a * a);
    return gain;
}

SampledGain sampled_stationary_gain(const ReducedLinearModel& reduced, double theta, double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("sampled_stationary_gain: dt must be > 0");
    const double a = reduced.abar(theta), da = reduced.d_abar(theta);
    const double beta = reduced.betabar(theta), dbeta = reduced.d_betabar(theta);
    const double g = reduced.gamma(theta), dg = reduced.d_gamma(theta);
    const double s2 = reduced.Sigma * reduced.Sigma;
    if (!(beta > 0.0)) throw InvalidArgument("sampled_stationary_gain: betabar must be > 0");

    // OU transition U' = phi U + sqrt(q2) Z over dt.
    const double phi = std::exp(-beta * dt);
    const double dphi = -dbeta * dt * phi;
    const double w = -std::expm1(-2.0 * beta * dt) / (2.0 * beta);
    const double dw = (-phi * dphi - dbeta * w) / beta;
    const double q2 = g * g * w;
    const double dq2 = 2.0 * g * dg * w + g * g * dw;
    const double c = a * a * dt;
    const double dc = 2.0 * a * da * dt;

    // Stationary predictive variance: c P^2 + B P - q2 Sigma^2 = 0.
    const double B = s2 * (1.0 - phi * phi) - q2 * c;
    const double dB = -2.0 * s2 * phi * dphi - dq2 * c - q2 * dc;
    const double disc = std::sqrt(B * B + 4.0 * c * q2 * s2);
    const double P = B >= 0.0 ? 2.0 * q2 * s2 / (B + disc) : (-B + disc) / (2.0 * c);
    const double dP = disc > 0.0 ? -(dc * P * P + dB * P - dq2 * s2) / disc : 0.0;

    const double r = c * P / (s2 + c * P);
    const double dr = (dc * P + c * dP) * s2 / ((s2 + c * P) * (s2 + c * P));

    SampledGain out;
    out.variance = P;
    out.gain = phi * r / dt;
    out.d_gain = (dphi * r + phi * dr) / dt;
    out.decay = phi * (1.0 - r);
    out.d_decay = dphi * (1.0 - r) - phi * dr;
    return out;
}

double riccati_rhs(const ReducedLinearModel& reduced, double theta, double sigma_hat) {
    const double a = reduced.abar(theta);
    const double g = reduced.gamma(theta);
    const double s2 = reduced.Sigma * reduced.Sigma;
    return -2.0 * reduced.betabar(theta) * sigma_hat - a * a * sigma_hat * sigma_hat / s2 + g * g;
}

namespace {

FilterPath make_filter_path(const Path& obs, Discretization scheme) {
    FilterPath out;
    out.t0 = obs.t0;
    out.dt = obs.dt;
    out.scheme = scheme;
    out.pi_h.resize(obs.n_steps + 1);
    out.sigma_hat.resize(obs.n_steps + 1);
    out.nu.resize(obs.n_steps);
    return out;
}

FilterPath kalman_euler(const ReducedLinearModel& reduced, double theta, const Path& obs,
                        const KalmanOptions& options) {
    const auto& y = obs.channel("Y");
    const std::size_t n = obs.n_steps;
    const double dt = obs.dt;
    const double a = reduced.abar(theta);
    const double beta = reduced.betabar(theta);
    const double s2 = reduced.Sigma * reduced.Sigma;
    double var = options.sigma_hat0 ? *options.sigma_hat0 : stationary_gain(reduced, theta).sigma_hat_inf;
    if (!(var >= 0.0)) throw InvalidArgument("kalman_bucy: initial variance must be >= 0");
    double mean = options.u_hat0;

    FilterPath out = make_filter_path(obs, Discretization::Euler);
    for (std::size_t k = 0; k < n; ++k) {
        const double pi = a * mean;
        out.pi_h[k] = pi;
        out.sigma_hat[k] = var;
        const double innovation = (y[k + 1] - y[k]) - pi * dt;
        out.nu[k] = innovation / reduced.Sigma;
        mean += -beta * mean * dt + (a * var / s2) * innovation;
        var = std::max(0.0, var + riccati_rhs(reduced, theta, var) * dt);
        if (!std::isfinite(mean) || !std::isfinite(var))
            throw InstabilityError("kalman_bucy: non-finite filter state", k + 1);
    }
    out.pi_h[n] = a * mean;
    out.sigma_hat[n] = var;
    return out;
}

FilterPath kalman_sampled(const ReducedLinearModel& reduced, double theta, const Path& obs,
                          const KalmanOptions& options) {
    const auto& y = obs.channel("Y");
    const std::size_t n = obs.n_steps;
    const double dt = obs.dt;
    const double a = reduced.abar(theta);
    const double beta = reduced.betabar(theta);
    const double g = reduced.gamma(theta);
    const double s2 = reduced.Sigma * reduced.Sigma;
    FilterPath out = make_filter_path(obs, Discretization::SampledData);

    if (!options.sigma_hat0) {
        const SampledGain gain = sampled_stationary_gain(reduced, theta, dt);
        double pi = a * options.u_hat0;
        for (std::size_t k = 0; k < n; ++k) {
            out.pi_h[k] = pi;
            out.sigma_hat[k] = gain.variance;
            const double dy = y[k + 1] - y[k];
            out.nu[k] = (dy - pi * dt) / reduced.Sigma;
            pi = gain.decay * pi + gain.gain * dy;
            if (!std::isfinite(pi)) throw InstabilityError("kalman_bucy: non-finite filter state", k + 1);
        }
        out.pi_h[n] = pi;
        out.sigma_hat[n] = gain.variance;
        return out;
    }

    if (!(beta > 0.0)) throw InvalidArgument("kalman_bucy: betabar must be > 0");
    double var = *options.sigma_hat0;
    if (!(var >= 0.0)) throw InvalidArgument("kalman_bucy: initial variance must be >= 0");
    const double phi = std::exp(-beta * dt);
    const double q2 = g * g * (-std::expm1(-2.0 * beta * dt) / (2.0 * beta));
    double mean = options.u_hat0;
    for (std::size_t k = 0; k < n; ++k) {
        out.pi_h[k] = a * mean;
        out.sigma_hat[k] = var;
        const double innovation = (y[k + 1] - y[k]) - a * mean * dt;
        out.nu[k] = innovation / reduced.Sigma;
        const double denom = a * a * dt * var + s2;
        mean = phi * (mean + var * a / denom * innovation);
        var = phi * phi * var * s2 / denom + q2;
        if (!std::isfinite(mean) || !std::isfinite(var))
            throw InstabilityError("kalman_bucy: non-finite filter state", k + 1);
    }
    out.pi_h[n] = a * mean;
    out.sigma_hat[n] = var;
    return out;
}

// Conditional variance of the chain state, p (1 - p).
void fill_bernoulli_variance(FilterPath& out) {
    out.sigma_hat.resize(out.pi_h.size());
    for (std::size_t k = 0; k < out.pi_h.size(); ++k) out.sigma_hat[k] = out.pi_h[k] * (1.0 - out.pi_h[k]);
}

}  // namespace

FilterPath kalman_bucy(const ReducedLinearModel& reduced, double theta, const Path& obs,
                       const KalmanOptions& options) {
    if (!(obs.dt > 0.0)) throw InvalidArgument("kalman_bucy: dt must be > 0");
    if (options.scheme == Discretization::Euler) return kalman_euler(reduced, theta, obs, options);
    return kalman_sampled(reduced, theta, obs, options);
}

TangentPath tangent_filter(const ReducedLinearModel& reduced, double theta, const Path& obs,
                           const FilterPath& filter) {
    if (filter.pi_h.size() != obs.size() || filter.nu.size() != obs.n_steps || filter.dt != obs.dt)
        throw InvalidArgument("tangent_filter: filter and observation grids differ");

    const double dt = obs.dt;
    const auto& y = obs.channel("Y");
    TangentPath out;
    out.t0 = obs.t0;
    out.dt = dt;
    out.pi_dot.resize(obs.size());
    double dot = 0.0;
    out.pi_dot[0] = dot;

    if (filter.scheme == Discretization::SampledData) {
        const SampledGain gain = sampled_stationary_gain(reduced, theta, dt);
        for (std::size_t k = 0; k < obs.n_steps; ++k) {
            dot = gain.decay * dot + gain.d_decay * filter.pi_h[k] + gain.d_gain * (y[k + 1] - y[k]);
            if (!std::isfinite(dot)) throw InstabilityError("tangent_filter: non-finite state", k + 1);
            out.pi_dot[k + 1] = dot;
        }
        return out;
    }

    const double d_beta = reduced.d_betabar(theta);
    const double kappa = reduced.kappa(theta);
    const double d_zeta_sigma = reduced.d_zeta(theta) * reduced.Sigma;
    for (std::size_t k = 0; k < obs.n_steps; ++k) {
        dot += (-d_beta * filter.pi_h[k] - kappa * dot) * dt + d_zeta_sigma * filter.nu[k];
        if (!std::isfinite(dot)) throw InstabilityError("tangent_filter: non-finite state", k + 1);
        out.pi_dot[k + 1] = dot;
    }
    return out;
}

FilterPath wonham_filter(double theta, double Sigma, const Path& obs, const WonhamOptions& options) {
    if (!(theta >= 0.0)) throw InvalidArgument("wonham_filter: theta must be >= 0");
    if (!(Sigma > 0.0)) throw InvalidArgument("wonham_filter: Sigma must be > 0");
    if (!(options.p0 >= 0.0 && options.p0 <= 1.0)) throw InvalidArgument("wonham_filter: p0 must be in [0,1]");
    const auto& y = obs.channel("Y");
    const std::size_t n = obs.n_steps;
    const double dt = obs.dt;
    const double inv_s2 = 1.0 / (Sigma * Sigma);

    FilterPath out;
    out.t0 = obs.t0;
    out.dt = dt;
    out.scheme = options.scheme;
    out.pi_h.resize(n + 1);
    out.nu.resize(n);

    if (options.scheme == Discretization::SampledData) {
        const double flip = -0.5 * std::expm1(-2.0 * theta * dt);
        double p = options.p0;
        for (std::size_t k = 0; k < n; ++k) {
            out.pi_h[k] = p;
            const double dy = y[k + 1] - y[k];
            out.nu[k] = (dy - p * dt) / Sigma;
            double posterior = p;
            if (options.use_observations) {
                // Bayes update in log-odds form; state 1 carries likelihood ratio e^a.
                const double a = (dy - 0.5 * dt) * inv_s2;
                if (p <= 0.0 || p >= 1.0) {
                    posterior = p;
                } else {
                    const double log_odds = std::log(p) - std::log1p(-p) + a;
                    posterior = 1.0 / (1.0 + std::exp(-log_odds));
                }
            }
            p = flip + posterior * (1.0 - 2.0 * flip);
            if (!std::isfinite(p)) throw InstabilityError("wonham_filter: non-finite state", k + 1);
        }
        out.pi_h[n] = p;
        fill_bernoulli_variance(out);
        return out;
    }

    double p = std::clamp(options.p0, kWonhamClamp, 1.0 - kWonhamClamp);
    for (std::size_t k = 0; k < n; ++k) {
        out.pi_h[k] = p;
        const double innovation = (y[k + 1] - y[k]) - p * dt;
        out.nu[k] = innovation / Sigma;
        double next = p + theta * (1.0 - 2.0 * p) * dt;
        if (options.use_observations) next += p * (1.0 - p) * inv_s2 * innovation;
        if (!std::isfinite(next)) throw InstabilityError("wonham_filter: non-finite state", k + 1);
        p = std::clamp(next, kWonhamClamp, 1.0 - kWonhamClamp);
    }
    out.pi_h[n] = p;
    fill_bernoulli_variance(out);
    return out;
}

ParticleFilterResult particle_filter(const ModelSpec& model, double theta, const Path& obs,
                                     std::size_t n_particles, std::uint64_t seed) {
    model.validate();
    if (n_particles < 2) throw InvalidArgument("particle_filter: need at least 2 particles");
    const auto& y = obs.channel("Y");
    const std::size_t n = obs.n_steps;
    const double dt = obs.dt;
    const double inv_s2 = 1.0 / (model.Sigma * model.Sigma);
    const std::size_t N = n_particles;
    const double inv_n = 1.0 / static_cast<double>(N);

    NormalSource noise(seed, Stream::Particles);
    Engine& engine = noise.engine();
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    double u0_sd = 0.0;
    if (!model.slow_is_chain && (model.tag == ExampleTag::Example1 || model.tag == ExampleTag::Example2 || model.linear)) {
        const ReducedLinearModel reduced = reduce(model);
        const double a = reduced.abar(theta);
        if (a != 0.0) u0_sd = std::sqrt(model.Sigma * model.Sigma * reduced.zeta(theta) / (a * a));
    }

    std::vector<double> xs(N), us(N), hs(N), logw(N), w(N), cum(N);
    std::vector<double> xs_next(N), us_next(N);
    for (std::size_t i = 0; i < N; ++i) {
        us[i] = model.slow_is_chain ? static_cast<double>(engine() >> 63) : u0_sd * normal(engine);
        xs[i] = 0.0;
        if (model.invariant) {
            const GaussianMeasure mu = model.invariant(us[i], theta);
            xs[i] = mu.mean + mu.sd() * normal(engine);
        }
    }

    const HiddenStepper stepper(model, theta, dt);
    ParticleFilterResult result;
    FilterPath& out = result.path;
    out.t0 = obs.t0;
    out.dt = dt;
    out.pi_h.resize(n + 1);
    out.nu.resize(n);
    out.ess.resize(n + 1);
    result.pi_h_sd.resize(n + 1);

    auto record_moments = [&](std::size_t k) {
        double mean = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            hs[i] = model.h(xs[i], us[i], theta);
            mean += hs[i];
        }
        mean *= inv_n;
        double var = 0.0;
        for (std::size_t i = 0; i < N; ++i) var += (hs[i] - mean) * (hs[i] - mean);
        out.pi_h[k] = mean;
        result.pi_h_sd[k] = std::sqrt(var * inv_n);
    };

    for (std::size_t k = 0; k < n; ++k) {
        record_moments(k);
        const double dy = y[k + 1] - y[k];
        out.nu[k] = (dy - out.pi_h[k] * dt) / model.Sigma;

        double max_logw = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < N; ++i) {
            logw[i] = (hs[i] * dy - 0.5 * hs[i] * hs[i] * dt) * inv_s2;
            if (std::isnan(logw[i])) logw[i] = -std::numeric_limits<double>::infinity();
            max_logw = std::max(max_logw, logw[i]);
        }
        if (!std::isfinite(max_logw)) throw InstabilityError("particle_filter: weights degenerate", k);

        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            w[i] = std::exp(logw[i] - max_logw);
            sum += w[i];
            sum_sq += w[i] * w[i];
        }
        result.log_evidence += max_logw + std::log(sum * inv_n);
        out.ess[k] = sum * sum / sum_sq;

        // Systematic resampling.
        double running = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            running += w[i] / sum;
            cum[i] = running;
        }
        cum[N - 1] = 1.0;
        const double offset = unif(engine) * inv_n;
        std::size_t j = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const double target = offset + static_cast<double>(i) * inv_n;
            while (cum[j] < target && j + 1 < N) ++j;
            xs_next[i] = xs[j];
            us_next[i] = us[j];
        }

        for (std::size_t i = 0; i < N; ++i) {
            const double x = xs_next[i];
            const double u = us_next[i];
            us[i] = model.slow_is_chain ? stepper.advance_chain(u, engine) : stepper.advance_slow(x, u, noise);
            xs[i] = stepper.advance_fast(x, u, noise);
        }
    }
    record_moments(n);
    out.ess[n] = static_cast<double>(N);
    return result;
}

}  // namespace msfm
