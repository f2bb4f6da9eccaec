#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "msfm/model.hpp"
#include "msfm/rng.hpp"

namespace msfm {

/// Uniform time grid with named channels of length n_steps + 1.
struct Path {
    double t0 = 0.0;
    double dt = 0.0;
    std::size_t n_steps = 0;
    std::uint64_t seed = 0;
    /// Scale separation of the generating model; 0 for reduced paths.
    double delta = 0.0;
    std::vector<std::pair<std::string, std::vector<double>>> channels;

    std::size_t size() const { return n_steps + 1; }
    double horizon() const { return dt * static_cast<double>(n_steps); }
    double time(std::size_t k) const { return t0 + dt * static_cast<double>(k); }

    bool has(std::string_view name) const;
    /// Throws InvalidArgument when absent.
    const std::vector<double>& channel(std::string_view name) const;
    std::vector<double>& channel(std::string_view name);
    void set_channel(std::string name, std::vector<double> values);

    /// Every channel has n_steps + 1 finite values; dt > 0.
    void validate() const;
};

/// Number of steps of a grid of spacing dt over [0, T]; T/dt must be integral to 1e-9.
std::size_t grid_steps(double T, double dt);

struct InitialState {
    std::optional<double> x0;
    std::optional<double> u0;
};

/// One-step transition of the hidden pair (X, U) of a ModelSpec over an interval dt,
/// with left-point evaluation of every coefficient. Shared by the simulator and the
/// particle filter.
class HiddenStepper {
public:
    HiddenStepper(const ModelSpec& model, double theta, double dt);

    /// Fast component: exact OU transition when the model allows it, otherwise
    /// ceil(10 dt / delta) Euler substeps with u frozen.
    double advance_fast(double x, double u, NormalSource& noise) const;
    /// Slow diffusion by Euler-Maruyama.
    double advance_slow(double x, double u, NormalSource& noise) const;
    /// Slow chain by its exact transition probability over dt.
    double advance_chain(double u, Engine& engine) const;

    std::size_t fast_substeps() const { return substeps_; }

private:
    const ModelSpec& model_;
    double theta_;
    double dt_;
    double decay_ = 0.0;
    double ou_sd_ = 0.0;
    std::size_t substeps_ = 1;
    double flip_probability_ = 0.0;
};

/// Draws (X0, U0) with the stationary-regime convention: U0 ~ N(0, Sigma^2 zeta / abar^2)
/// for linear models, uniform on {0,1} for a chain; X0 from the fast invariant measure at U0.
std::pair<double, double> draw_initial_state(const ModelSpec& model, double theta, Engine& engine);

/// Full system on the grid dt over [0, T]. Channels Y, U, X.
Path simulate_multiscale(const ModelSpec& model, double theta, double T, double dt, std::uint64_t seed,
                         const InitialState& init = {});

/// Reduced linear system: exact OU transitions for U, Ito-Euler for Y. Channels Y, U.
Path simulate_reduced(const ReducedLinearModel& reduced, double theta, double T, double dt,
                      std::uint64_t seed, const InitialState& init = {});

/// Symmetric 2-state chain with intensity theta, exact holding times sampled on the grid
/// (last value). Channel U. U0 uniform on {0,1} unless given.
Path simulate_ctmc(double theta, double T, double dt, std::uint64_t seed,
                   std::optional<double> u0 = std::nullopt);

/// Reduced Example3 system dY = U dt + Sigma dW with U the chain. Channels Y, U.
Path simulate_reduced_chain(double theta, double Sigma, double T, double dt, std::uint64_t seed);

}  // namespace msfm
