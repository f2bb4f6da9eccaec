#include "msfm/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "json.hpp"

#include "msfm/csv.hpp"
#include "msfm/error.hpp"
#include "msfm/filters.hpp"
#include "msfm/inference.hpp"
#include "msfm/rng.hpp"

namespace msfm {

namespace {

using nlohmann::json;

// Writes through `write` into `path`, or into `fallback` when path is empty or "-".
template <class Write>
void emit(const std::string& path, std::ostream& fallback, Write write) {
    if (path.empty() || path == "-") {
        write(fallback);
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error("cannot open '" + path + "' for writing");
    write(file);
    file.flush();
    if (!file) throw Error("write to '" + path + "' failed");
}

Path observations(const RunConfig& c, const ModelSpec& model) {
    if (!c.input.empty()) {
        std::ifstream file(c.input, std::ios::binary);
        if (!file) throw Error("cannot open input '" + c.input + "'");
        Path path = read_path_csv(file);
        if (!path.has("Y")) throw InvalidArgument("input '" + c.input + "' has no Y column");
        return path;
    }
    return simulate_multiscale(model, *c.alpha, c.T, c.dt, *c.seed);
}

Discretization scheme_of(const RunConfig& c) {
    return c.scheme == "euler" ? Discretization::Euler : Discretization::SampledData;
}

void run_simulate(const RunConfig& c, std::ostream& out) {
    const ModelSpec model = make_model(c);
    const Path path = simulate_multiscale(model, *c.alpha, c.T, c.dt, *c.seed);
    emit(c.out, out, [&](std::ostream& s) { write_path_csv(s, path); });
}

void run_filter(const RunConfig& c, std::ostream& out) {
    const ModelSpec model = make_model(c);
    const Path obs = observations(c, model);
    const double theta = c.theta.value_or(c.alpha.value_or(0.0));
    std::string kind = c.filter;
    if (kind.empty()) kind = model.slow_is_chain ? "wonham" : "kalman";

    FilterPath result;
    FilterColumns columns = FilterColumns::Variance;
    if (kind == "particle") {
        result = particle_filter(model, theta, obs, c.n_particles, derive_seed(*c.seed, 1)).path;
        columns = FilterColumns::Ess;
    } else if (kind == "wonham") {
        WonhamOptions options;
        options.scheme = scheme_of(c);
        result = wonham_filter(theta, c.Sigma, obs, options);
    } else {
        KalmanOptions options;
        options.scheme = scheme_of(c);
        result = kalman_bucy(reduce(model), theta, obs, options);
    }
    emit(c.out, out, [&](std::ostream& s) { write_filter_csv(s, result, columns); });
}

json number_or_null(double value) { return std::isfinite(value) ? json(value) : json(nullptr); }

void run_estimate(const RunConfig& c, std::ostream& out) {
    const ModelSpec model = make_model(c);
    const Path obs = observations(c, model);
    MleOptions options;
    options.fisher_T = c.fisher_T;
    options.fisher_dt = obs.dt;
    options.fisher_seed = derive_seed(c.seed.value_or(1), 0xf15e7ULL);
    const EstimationResult r = mle(model, obs, options);

    json j;
    j["theta_hat"] = r.theta_hat;
    j["clamped"] = r.clamped;
    j["fisher"] = number_or_null(r.fisher);
    j["theoretical_stderr"] = number_or_null(r.theoretical_stderr);
    j["loglik"] = r.loglik_at_max;
    out << j.dump(2) << '\n';

    if (!c.profile.empty()) {
        const auto profile = likelihood_profile(model, obs, 201);
        emit(c.profile, out, [&](std::ostream& s) { write_profile_csv(s, profile); });
    }
}

void run_fisher(const RunConfig& c, std::ostream& out) {
    const ModelSpec model = make_model(c);
    const double alpha = *c.alpha;
    json j;
    j["alpha"] = alpha;
    double fisher = 0.0;
    if (model.slow_is_chain) {
        fisher = fisher_numeric(model, alpha, c.fisher_T, c.dt, derive_seed(*c.seed, 0xf15e7ULL));
        j["method"] = "numeric";
    } else {
        fisher = fisher_closed(reduce(model), alpha);
        j["method"] = "closed";
    }
    j["fisher"] = fisher;
    j["theoretical_stderr"] = number_or_null(theoretical_stderr(fisher, c.T));
    j["T"] = c.T;
    out << j.dump(2) << '\n';
}

void run_mc_table(const RunConfig& c, std::ostream& out) {
    std::vector<TableRow> rows;
    for (double alpha : table_alphas(c)) rows.push_back({alpha, run_mc_study(make_mc_config(c, alpha))});
    const std::string path = c.out.empty() ? "table.csv" : c.out;
    emit(path, out, [&](std::ostream& s) { write_table_csv(s, rows); });
}

void run_converge(const RunConfig& c, std::ostream& out) {
    const ModelSpec model = make_model(c);
    ConvergenceOptions options;
    options.n_particles = c.n_particles;
    options.n_replicates = c.n_replicates;
    options.T = c.T;
    options.dt = c.dt;
    options.root_seed = *c.seed;
    options.jobs = c.jobs;
    const std::vector<double> deltas = c.deltas.empty() ? std::vector<double>{0.1, 0.04, 0.01} : c.deltas;
    const auto rows = filter_convergence_study(model, *c.alpha, deltas, options);
    emit(c.out, out, [&](std::ostream& s) { write_convergence_csv(s, rows); });
}

void run_hist(const RunConfig& c, std::ostream& out) {
    const McResult result = run_mc_study(make_mc_config(c, *c.alpha));
    const std::filesystem::path dir = c.out.empty() ? std::filesystem::path(".") : std::filesystem::path(c.out);
    std::filesystem::create_directories(dir);
    emit((dir / "hist.csv").string(), out, [&](std::ostream& s) { write_histogram_csv(s, result.histogram); });
    emit((dir / "overlay.csv").string(), out, [&](std::ostream& s) { write_overlay_csv(s, result.histogram); });
}

}  // namespace

int dispatch(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        validate(config);
        const auto& s = config.subcommand;
        if (s == "simulate") run_simulate(config, out);
        else if (s == "filter") run_filter(config, out);
        else if (s == "estimate") run_estimate(config, out);
        else if (s == "fisher") run_fisher(config, out);
        else if (s == "mc-table") run_mc_table(config, out);
        else if (s == "converge") run_converge(config, out);
        else if (s == "hist") run_hist(config, out);
        else throw ConfigError("subcommand", "unknown subcommand '" + s + "'");
    } catch (const std::exception& e) {
        err << "msfm " << config.subcommand << ": " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace msfm
