#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "msfm/experiments.hpp"
#include "msfm/model.hpp"

namespace msfm {

/// Parameters of one CLI run. Unset optionals are filled per subcommand by the
/// consumers (bounds from the example, theta from alpha).
struct RunConfig {
    std::string subcommand;
    ExampleTag example = ExampleTag::Example1;
    std::optional<double> alpha;
    std::optional<double> theta;
    double T = 25.0;
    double delta = 0.01;
    double dt = 0.02;
    double Sigma = 0.1;
    double sigma = 0.1;
    std::optional<std::uint64_t> seed;
    std::size_t n_replicates = 500;
    std::size_t n_particles = 1000;
    std::size_t n_bins = 25;
    std::optional<double> theta_lo;
    std::optional<double> theta_hi;
    /// Output file (simulate, filter, mc-table, converge) or directory (hist).
    std::string out;
    /// Observation CSV for filter and estimate; simulated from alpha and seed when empty.
    std::string input;
    /// Likelihood profile CSV written by estimate when set.
    std::string profile;
    /// kalman, wonham or particle; empty selects the reduced filter of the example.
    std::string filter;
    /// Discretization of the reduced filters: sampled or euler.
    std::string scheme = "sampled";
    std::vector<double> alphas;
    std::vector<double> deltas;
    double fisher_T = 2000.0;
    unsigned jobs = 1;

    bool operator==(const RunConfig&) const = default;
};

using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

/// Keys accepted in a config file and as overrides.
const std::vector<std::string>& config_keys();

/// Parses line-oriented `key = value` text ('#' starts a comment), applies the overrides
/// on top, falls back to env_seed for a missing seed, and validates. Lists are comma
/// separated. Throws ConfigError naming the key.
RunConfig parse_config(std::string_view file_text, const ConfigOverrides& overrides = {},
                       std::optional<std::string> env_seed = std::nullopt);

/// Text that parse_config maps back to the same RunConfig.
std::string emit_config(const RunConfig& config);

/// Throws ConfigError when a required key is missing or a value is out of range.
void validate(const RunConfig& config);

ExampleParams example_params(const RunConfig& config);
ModelSpec make_model(const RunConfig& config);

/// Monte Carlo settings of one table row at alpha.
McConfig make_mc_config(const RunConfig& config, double alpha);

/// Table alphas: the configured list, else the three reference values of the example.
std::vector<double> table_alphas(const RunConfig& config);

}  // namespace msfm
