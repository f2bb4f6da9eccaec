// msfm: simulate, filter and estimate slow-fast diffusion models from the command line.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "msfm/cli.hpp"
#include "msfm/error.hpp"

namespace {

struct Flag {
    const char* key;
    const char* help;
};

const Flag kFlags[] = {
    {"example", "example1, example2 or example3"},
    {"alpha", "true parameter used for simulation"},
    {"theta", "parameter at which the filter runs"},
    {"T", "horizon"},
    {"delta", "scale separation"},
    {"dt", "observation step"},
    {"Sigma", "observation noise"},
    {"sigma", "fast-process noise"},
    {"seed", "root seed (falls back to MSFM_SEED)"},
    {"n_replicates", "Monte Carlo replicates"},
    {"n_particles", "particle count"},
    {"n_bins", "histogram bins"},
    {"theta_lo", "lower parameter bound"},
    {"theta_hi", "upper parameter bound"},
    {"out", "output file (directory for hist)"},
    {"input", "observation CSV with columns t,Y,..."},
    {"profile", "likelihood profile CSV (estimate)"},
    {"filter", "kalman, wonham or particle"},
    {"scheme", "sampled or euler"},
    {"alphas", "comma separated table parameters"},
    {"deltas", "comma separated scale separations"},
    {"fisher_T", "horizon of the numeric Fisher information"},
    {"jobs", "worker threads"},
};

std::string dashed(std::string key) {
    for (auto& ch : key)
        if (ch == '_') ch = '-';
    return key;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parameter estimation for partially observed slow-fast diffusions"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    std::string config_path;
    std::map<std::string, std::string> values;
    const char* names[] = {"simulate", "filter", "estimate", "fisher", "mc-table", "converge", "hist"};
    for (const char* name : names) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "key = value config file");
        for (const auto& flag : kFlags) {
            std::string opt = "--" + dashed(flag.key);
            if (dashed(flag.key) != flag.key) opt += ",--" + std::string(flag.key);
            sub->add_option_function<std::string>(
                opt, [&values, key = std::string(flag.key)](const std::string& v) { values[key] = v; }, flag.help);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    std::string file_text;
    if (!config_path.empty()) {
        std::ifstream file(config_path);
        if (!file) {
            std::cerr << "msfm: cannot open config '" << config_path << "'\n";
            return 2;
        }
        std::ostringstream buffer;
        buffer << file.rdbuf();
        file_text = buffer.str();
    }

    msfm::ConfigOverrides overrides;
    overrides.emplace_back("subcommand", app.get_subcommands().front()->get_name());
    for (const auto& [key, value] : values) overrides.emplace_back(key, value);

    std::optional<std::string> env_seed;
    if (const char* env = std::getenv("MSFM_SEED")) env_seed = env;

    msfm::RunConfig config;
    try {
        config = msfm::parse_config(file_text, overrides, env_seed);
    } catch (const msfm::Error& e) {
        std::cerr << "msfm: " << e.what() << '\n';
        return 2;
    }
    return msfm::dispatch(config, std::cout, std::cerr);
}
