#include "msfm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "msfm/error.hpp"
#include "msfm/simulate.hpp"

namespace msfm {

namespace {

const std::vector<std::string> kSubcommands = {"simulate", "filter", "estimate", "fisher",
                                               "mc-table", "converge", "hist"};

std::string trim(std::string_view s) {
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

double parse_double(const std::string& key, const std::string& text) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    if (!text.empty() && text.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || first == last || !std::isfinite(value))
        throw ConfigError(key, "malformed number '" + text + "'");
    return value;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
    std::uint64_t value = 0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || first == last)
        throw ConfigError(key, "malformed non-negative integer '" + text + "'");
    return value;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> values;
    std::istringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) values.push_back(parse_double(key, trim(item)));
    if (values.empty()) throw ConfigError(key, "empty list");
    return values;
}

std::string number_text(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void apply(RunConfig& c, const std::string& key, const std::string& value) {
    if (key == "subcommand") {
        if (std::find(kSubcommands.begin(), kSubcommands.end(), value) == kSubcommands.end())
            throw ConfigError(key, "unknown subcommand '" + value + "'");
        c.subcommand = value;
    } else if (key == "example") {
        try {
            c.example = parse_example_tag(value);
        } catch (const InvalidArgument&) {
            throw ConfigError(key, "expected example1, example2 or example3, got '" + value + "'");
        }
        if (c.example == ExampleTag::Custom) throw ConfigError(key, "custom models are not available here");
    } else if (key == "alpha") {
        c.alpha = parse_double(key, value);
    } else if (key == "theta") {
        c.theta = parse_double(key, value);
    } else if (key == "T") {
        c.T = parse_double(key, value);
    } else if (key == "delta") {
        c.delta = parse_double(key, value);
    } else if (key == "dt") {
        c.dt = parse_double(key, value);
    } else if (key == "Sigma") {
        c.Sigma = parse_double(key, value);
    } else if (key == "sigma") {
        c.sigma = parse_double(key, value);
    } else if (key == "seed") {
        c.seed = parse_unsigned(key, value);
    } else if (key == "n_replicates") {
        c.n_replicates = parse_unsigned(key, value);
    } else if (key == "n_particles") {
        c.n_particles = parse_unsigned(key, value);
    } else if (key == "n_bins") {
        c.n_bins = parse_unsigned(key, value);
    } else if (key == "theta_lo") {
        c.theta_lo = parse_double(key, value);
    } else if (key == "theta_hi") {
        c.theta_hi = parse_double(key, value);
    } else if (key == "out") {
        c.out = value;
    } else if (key == "input") {
        c.input = value;
    } else if (key == "profile") {
        c.profile = value;
    } else if (key == "filter") {
        if (value != "kalman" && value != "wonham" && value != "particle")
            throw ConfigError(key, "expected kalman, wonham or particle, got '" + value + "'");
        c.filter = value;
    } else if (key == "scheme") {
        if (value != "sampled" && value != "euler")
            throw ConfigError(key, "expected sampled or euler, got '" + value + "'");
        c.scheme = value;
    } else if (key == "alphas") {
        c.alphas = parse_list(key, value);
    } else if (key == "deltas") {
        c.deltas = parse_list(key, value);
    } else if (key == "fisher_T") {
        c.fisher_T = parse_double(key, value);
    } else if (key == "jobs") {
        auto jobs = parse_unsigned(key, value);
        if (jobs == 0 || jobs > 1024) throw ConfigError(key, "must lie in [1, 1024]");
        c.jobs = static_cast<unsigned>(jobs);
    } else {
        throw ConfigError(key, "unknown key");
    }
}

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key, what);
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "subcommand", "example",  "alpha",    "theta",  "T",       "delta",  "dt",
        "Sigma",      "sigma",    "seed",     "n_replicates",       "n_particles",
        "n_bins",     "theta_lo", "theta_hi", "out",    "input",   "profile", "filter",
        "scheme",     "alphas",   "deltas",   "fisher_T",           "jobs"};
    return keys;
}

RunConfig parse_config(std::string_view file_text, const ConfigOverrides& overrides,
                       std::optional<std::string> env_seed) {
    std::map<std::string, std::string> values;
    std::vector<std::string> order;
    auto set = [&](const std::string& key, const std::string& value) {
        const auto& keys = config_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError(key, "unknown key");
        if (!values.count(key)) order.push_back(key);
        values[key] = value;
    };

    std::istringstream stream{std::string(file_text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto text = trim(line);
        if (text.empty()) continue;
        auto eq = text.find('=');
        if (eq == std::string::npos)
            throw ConfigError(trim(text), "line " + std::to_string(line_no) + " is not of the form key = value");
        auto key = trim(std::string_view(text).substr(0, eq));
        if (key.empty()) throw ConfigError("", "line " + std::to_string(line_no) + " has an empty key");
        set(key, trim(std::string_view(text).substr(eq + 1)));
    }
    for (const auto& [key, value] : overrides) set(key, trim(value));
    if (!values.count("seed") && env_seed && !trim(*env_seed).empty()) set("seed", trim(*env_seed));

    RunConfig config;
    bool has_example = false;
    for (const auto& key : order) {
        apply(config, key, values[key]);
        if (key == "example") has_example = true;
    }
    require(!config.subcommand.empty(), "subcommand", "missing required key");
    require(has_example, "example", "missing required key");
    validate(config);
    return config;
}

void validate(const RunConfig& c) {
    const auto& s = c.subcommand;
    require(std::find(kSubcommands.begin(), kSubcommands.end(), s) != kSubcommands.end(), "subcommand",
            "unknown subcommand '" + s + "'");
    require(c.T > 0.0, "T", "must be > 0");
    require(c.delta > 0.0, "delta", "must be > 0");
    require(c.dt > 0.0, "dt", "must be > 0");
    require(c.Sigma > 0.0, "Sigma", "must be > 0");
    require(c.sigma >= 0.0, "sigma", "must be >= 0");
    require(c.n_replicates >= 2, "n_replicates", "must be >= 2");
    require(c.n_particles >= 2, "n_particles", "must be >= 2");
    require(c.n_bins >= 2, "n_bins", "must be >= 2");
    require(c.fisher_T >= 100.0, "fisher_T", "must be >= 100");
    try {
        grid_steps(c.T, c.dt);
    } catch (const InvalidArgument&) {
        throw ConfigError("dt", "T / dt must be an integer");
    }
    auto bounds = default_bounds(c.example);
    double lo = c.theta_lo.value_or(bounds.lo);
    double hi = c.theta_hi.value_or(bounds.hi);
    require(lo < hi, c.theta_lo ? "theta_lo" : "theta_hi", "theta_lo must be < theta_hi");
    if (c.example == ExampleTag::Example3) {
        require(lo > 0.0, "theta_lo", "jump intensity bounds must be > 0");
        if (c.alpha) require(*c.alpha > 0.0, "alpha", "jump intensity must be > 0");
        for (double a : c.alphas) require(a > 0.0, "alphas", "jump intensities must be > 0");
        require(c.filter != "kalman", "filter", "example3 has no Kalman filter");
    } else {
        require(c.filter != "wonham", "filter", "the Wonham filter needs example3");
    }
    for (std::size_t i = 1; i < c.deltas.size(); ++i)
        require(c.deltas[i] <= c.deltas[i - 1], "deltas", "must be non-increasing");
    for (double d : c.deltas) require(d > 0.0, "deltas", "must be > 0");
    if (!c.deltas.empty()) require(c.deltas.size() >= 2, "deltas", "need at least two values");

    bool has_input = !c.input.empty();
    if (s == "simulate" || s == "fisher" || s == "converge" || s == "hist")
        require(c.alpha.has_value(), "alpha", "missing required key");
    if ((s == "filter" || s == "estimate") && !has_input)
        require(c.alpha.has_value(), "alpha", "missing required key (or give input)");
    if (s == "filter" && has_input) require(c.theta.has_value(), "theta", "missing required key");
    bool stochastic = s == "simulate" || s == "mc-table" || s == "converge" || s == "hist" ||
                      ((s == "filter" || s == "estimate") && !has_input) ||
                      (s == "filter" && c.filter == "particle") ||
                      (s == "fisher" && c.example == ExampleTag::Example3);
    if (stochastic) require(c.seed.has_value(), "seed", "missing required key (or set MSFM_SEED)");
}

std::string emit_config(const RunConfig& c) {
    std::ostringstream out;
    auto line = [&](const char* key, const std::string& value) { out << key << " = " << value << '\n'; };
    auto list = [](const std::vector<double>& values) {
        std::string text;
        for (std::size_t i = 0; i < values.size(); ++i) text += (i ? ", " : "") + number_text(values[i]);
        return text;
    };
    line("subcommand", c.subcommand);
    line("example", std::string(to_string(c.example)));
    if (c.alpha) line("alpha", number_text(*c.alpha));
    if (c.theta) line("theta", number_text(*c.theta));
    line("T", number_text(c.T));
    line("delta", number_text(c.delta));
    line("dt", number_text(c.dt));
    line("Sigma", number_text(c.Sigma));
    line("sigma", number_text(c.sigma));
    if (c.seed) line("seed", std::to_string(*c.seed));
    line("n_replicates", std::to_string(c.n_replicates));
    line("n_particles", std::to_string(c.n_particles));
    line("n_bins", std::to_string(c.n_bins));
    if (c.theta_lo) line("theta_lo", number_text(*c.theta_lo));
    if (c.theta_hi) line("theta_hi", number_text(*c.theta_hi));
    if (!c.out.empty()) line("out", c.out);
    if (!c.input.empty()) line("input", c.input);
    if (!c.profile.empty()) line("profile", c.profile);
    if (!c.filter.empty()) line("filter", c.filter);
    line("scheme", c.scheme);
    if (!c.alphas.empty()) line("alphas", list(c.alphas));
    if (!c.deltas.empty()) line("deltas", list(c.deltas));
    line("fisher_T", number_text(c.fisher_T));
    line("jobs", std::to_string(c.jobs));
    return out.str();
}

ExampleParams example_params(const RunConfig& c) {
    ExampleParams params;
    params.Sigma = c.Sigma;
    params.sigma = c.sigma;
    params.delta = c.delta;
    auto bounds = default_bounds(c.example);
    params.bounds = ThetaBounds{c.theta_lo.value_or(bounds.lo), c.theta_hi.value_or(bounds.hi)};
    return params;
}

ModelSpec make_model(const RunConfig& c) { return make_example(c.example, example_params(c)); }

McConfig make_mc_config(const RunConfig& c, double alpha) {
    McConfig mc;
    mc.example = c.example;
    mc.true_alpha = alpha;
    mc.n_replicates = c.n_replicates;
    mc.T = c.T;
    mc.delta = c.delta;
    mc.dt = c.dt;
    mc.Sigma = c.Sigma;
    mc.sigma = c.sigma;
    mc.bounds = *example_params(c).bounds;
    mc.root_seed = c.seed.value_or(1);
    mc.jobs = c.jobs;
    mc.n_bins = c.n_bins;
    mc.fisher_T = c.fisher_T;
    return mc;
}

std::vector<double> table_alphas(const RunConfig& c) {
    if (!c.alphas.empty()) return c.alphas;
    switch (c.example) {
        case ExampleTag::Example1: return {0.0, 1.0, 1.5};
        case ExampleTag::Example2: return {0.5, 1.0, 1.5};
        case ExampleTag::Example3: return {0.7, 1.0, 1.8};
        default: return {};
    }
}

}  // namespace msfm
