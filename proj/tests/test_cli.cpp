#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "json.hpp"
#include "msfm/cli.hpp"
#include "msfm/config.hpp"
#include "msfm/csv.hpp"
#include "msfm/error.hpp"

using namespace msfm;
namespace fs = std::filesystem;

namespace {

std::string config_error_key(const std::string& text, const ConfigOverrides& overrides = {}) {
    try {
        parse_config(text, overrides);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "<none>";
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("msfm_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir / name;
}

int run_cli(const std::string& args) {
    std::string cmd = std::string(MSFM_CLI_PATH) + " " + args;
    return std::system(cmd.c_str());
}

}  // namespace

TEST_CASE("defaults are applied") {
    auto c = parse_config("", {{"subcommand", "simulate"}, {"example", "example1"}, {"alpha", "0"}, {"seed", "7"}});
    CHECK(c.example == ExampleTag::Example1);
    CHECK(c.alpha == 0.0);
    CHECK(c.seed == 7u);
    CHECK(c.T == 25.0);
    CHECK(c.delta == 0.01);
    CHECK(c.dt == 0.02);
    CHECK(c.Sigma == 0.1);
    CHECK(c.sigma == 0.1);
    CHECK(c.n_replicates == 500);
    CHECK(c.n_particles == 1000);
    CHECK(c.n_bins == 25);
}

TEST_CASE("errors name the offending key") {
    const std::string base = "subcommand = simulate\nexample = example1\nalpha = 0\nseed = 1\n";
    CHECK(config_error_key(base + "delta = -1\n") == "delta");
    CHECK(config_error_key(base + "bogus = 3\n") == "bogus");
    CHECK(config_error_key(base + "T = ten\n") == "T");
    CHECK(config_error_key(base + "dt = 0.03\n") == "dt");
    CHECK(config_error_key(base + "n_replicates = 1\n") == "n_replicates");
    CHECK(config_error_key(base + "theta_lo = 3\n") == "theta_lo");
    CHECK(config_error_key("subcommand = simulate\nexample = example1\nseed = 1\n") == "alpha");
    CHECK(config_error_key("subcommand = simulate\nalpha = 1\nseed = 1\n") == "example");
    CHECK(config_error_key("subcommand = simulate\nexample = example1\nalpha = 1\n") == "seed");
    CHECK(config_error_key(base, {{"example", "example7"}}) == "example");
    CHECK(config_error_key(base, {{"subcommand", "plot"}}) == "subcommand");
    CHECK(config_error_key(base + "filter = wonham\n") == "filter");
    CHECK(config_error_key("subcommand = simulate\nexample = example1 alpha 3\n") == "example");
    try {
        parse_config(base + "delta = -1\n");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("delta") != std::string::npos);
    }
}

TEST_CASE("flags override the file and the environment supplies a seed") {
    auto c = parse_config("subcommand = fisher\nexample = example2\nalpha = 0.5\nT = 50\n", {{"T", "25"}});
    CHECK(c.T == 25.0);
    auto s = parse_config("subcommand = simulate\nexample = example1\nalpha = 0\n", {}, std::string("42"));
    CHECK(s.seed == 42u);
    auto t = parse_config("subcommand = simulate\nexample = example1\nalpha = 0\nseed = 3\n", {}, std::string("42"));
    CHECK(t.seed == 3u);
}

TEST_CASE("table settings map onto a Monte Carlo configuration") {
    const std::string text =
        "# table 1, second row\n"
        "subcommand = mc-table\n"
        "example = example1\n"
        "alphas = 1\n"
        "n_replicates = 500\n"
        "T = 25\n"
        "delta = 0.01\n"
        "Sigma = 0.1\n"
        "sigma = 0.1\n"
        "dt = 0.02\n"
        "seed = 1\n";
    auto c = parse_config(text);
    auto alphas = table_alphas(c);
    REQUIRE(alphas.size() == 1);
    auto mc = make_mc_config(c, alphas[0]);
    CHECK(mc.true_alpha == 1.0);
    CHECK(mc.n_replicates == 500);
    CHECK(mc.T == 25.0);
    CHECK(mc.delta == 0.01);
    CHECK(mc.bounds.lo == default_bounds(ExampleTag::Example1).lo);
    CHECK(table_alphas(parse_config("subcommand = mc-table\nexample = example2\nseed = 1\n")) ==
          std::vector<double>{0.5, 1.0, 1.5});
}

TEST_CASE("emit and parse round trip") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const char* subs[] = {"simulate", "filter", "estimate", "fisher", "mc-table", "converge", "hist"};
    for (int i = 0; i < 200; ++i) {
        RunConfig c;
        c.subcommand = subs[i % 7];
        c.example = static_cast<ExampleTag>(i % 3);
        c.alpha = 0.1 + u(rng);
        if (i % 2) c.theta = 0.1 + u(rng);
        c.T = 10.0 * (1 + i % 4);
        c.dt = (i % 3 == 0) ? 0.02 : 0.005;
        c.delta = 0.001 + u(rng);
        c.Sigma = 0.01 + u(rng);
        c.sigma = u(rng);
        c.seed = rng();
        c.n_replicates = 2 + i;
        c.n_particles = 10 + i;
        c.n_bins = 2 + i % 30;
        if (i % 3 == 1) {
            c.theta_lo = 0.05;
            c.theta_hi = 0.05 + 1.0 + u(rng);
        }
        if (i % 5 == 0) c.out = "out_" + std::to_string(i) + ".csv";
        if (i % 7 == 0) c.profile = "profile.csv";
        if (i % 4 == 0) c.filter = "particle";
        if (i % 6 == 0) c.scheme = "euler";
        if (i % 2 == 0) c.alphas = {0.2 + u(rng), 1.0 / 3.0, 1.7};
        if (i % 3 == 0) c.deltas = {0.1, 0.04, 0.01};
        c.fisher_T = 100.0 + 1000.0 * u(rng);
        c.jobs = 1 + i % 8;
        REQUIRE_NOTHROW(validate(c));
        CHECK(parse_config(emit_config(c)) == c);
    }
}

TEST_CASE("number formatting and path CSV round trip") {
    CHECK(format_number(1.0 / 3.0) == "0.333333333333333");
    CHECK(format_number(0.02) == "0.02");
    CHECK(format_number(-1e-20) == "-1e-20");

    auto path = simulate_multiscale(make_example(ExampleTag::Example1), 0.0, 1.0, 0.02, 5);
    std::ostringstream out;
    write_path_csv(out, path);
    const std::string text = out.str();
    CHECK(text.rfind("t,Y,U,X\n", 0) == 0);
    CHECK(text.find('\r') == std::string::npos);
    std::istringstream in(text);
    auto back = read_path_csv(in);
    CHECK(back.n_steps == path.n_steps);
    CHECK(back.dt == doctest::Approx(0.02));
    for (std::size_t k = 0; k < path.size(); ++k)
        CHECK(back.channel("Y")[k] == doctest::Approx(path.channel("Y")[k]).epsilon(1e-14));

    std::istringstream bad("t,Y\n0,0\n0.02,abc\n");
    CHECK_THROWS_AS(read_path_csv(bad), InvalidArgument);
    std::istringstream uneven("t,Y\n0,0\n0.02,1\n0.05,2\n");
    CHECK_THROWS_AS(read_path_csv(uneven), InvalidArgument);
}

TEST_CASE("dispatch writes the documented formats") {
    std::ostringstream out, err;
    auto sim = parse_config("", {{"subcommand", "simulate"}, {"example", "example1"}, {"alpha", "0"}, {"seed", "7"}, {"T", "1"}});
    REQUIRE(dispatch(sim, out, err) == 0);
    CHECK(out.str().rfind("t,Y,U,X\n", 0) == 0);
    std::size_t rows = 0;
    for (char ch : out.str()) rows += ch == '\n';
    CHECK(rows == 52);

    std::ostringstream json_out;
    auto est = parse_config("", {{"subcommand", "estimate"}, {"example", "example1"}, {"alpha", "1"}, {"seed", "3"}});
    REQUIRE(dispatch(est, json_out, err) == 0);
    auto j = nlohmann::json::parse(json_out.str());
    for (const char* key : {"theta_hat", "clamped", "fisher", "theoretical_stderr", "loglik"}) CHECK(j.contains(key));
    CHECK(j.size() == 5);
    CHECK(j["clamped"].is_boolean());

    std::ostringstream fout;
    auto filt = parse_config("", {{"subcommand", "filter"}, {"example", "example3"}, {"alpha", "1"}, {"seed", "3"}, {"T", "1"}});
    REQUIRE(dispatch(filt, fout, err) == 0);
    CHECK(fout.str().rfind("t,pi_h,sigma_hat\n", 0) == 0);
    std::ostringstream pout;
    auto pf = parse_config("", {{"subcommand", "filter"}, {"example", "example1"}, {"alpha", "1"}, {"seed", "3"},
                                {"T", "1"}, {"filter", "particle"}, {"n_particles", "50"}});
    REQUIRE(dispatch(pf, pout, err) == 0);
    CHECK(pout.str().rfind("t,pi_h,ess\n", 0) == 0);
    CHECK(err.str().empty());
}

TEST_CASE("dispatch reports module errors on one line") {
    std::ostringstream out, err;
    auto c = parse_config("", {{"subcommand", "estimate"}, {"example", "example1"}, {"input", "/nonexistent/obs.csv"}});
    CHECK(dispatch(c, out, err) != 0);
    const std::string msg = err.str();
    CHECK(!msg.empty());
    CHECK(msg.find('\n') == msg.size() - 1);
}

TEST_CASE("executable produces byte-identical outputs for a fixed seed") {
    const auto dir = scratch("");
    const std::string common = " --example example1 --alpha 0.5 --seed 9 --T 2";
    for (int i = 0; i < 2; ++i) {
        const std::string tag = std::to_string(i);
        CHECK(run_cli("simulate" + common + " --out " + (dir / ("sim" + tag + ".csv")).string()) == 0);
        CHECK(run_cli("estimate --example example1 --input " + (dir / "sim0.csv").string() + " --profile " +
                      (dir / ("prof" + tag + ".csv")).string() + " > " + (dir / ("est" + tag + ".json")).string()) == 0);
        CHECK(run_cli("filter" + common + " --out " + (dir / ("filt" + tag + ".csv")).string()) == 0);
        CHECK(run_cli("mc-table --example example2 --seed 4 --T 2 --n-replicates 4 --fisher-T 100 --out " +
                      (dir / ("table" + tag + ".csv")).string()) == 0);
        CHECK(run_cli("hist --example example1 --alpha 1 --seed 4 --T 2 --n-replicates 6 --out " +
                      (dir / ("hist" + tag)).string()) == 0);
        CHECK(run_cli("converge --example example1 --alpha 0 --seed 4 --T 1 --n-replicates 2 --n-particles 50 "
                      "--deltas 0.1,0.01 --out " + (dir / ("conv" + tag + ".csv")).string()) == 0);
        CHECK(run_cli("fisher --example example3 --alpha 1 --seed 4 --fisher-T 100 > " +
                      (dir / ("fisher" + tag + ".json")).string()) == 0);
    }
    for (const char* stem : {"sim", "prof", "est", "filt", "table", "conv", "fisher"}) {
        const std::string ext = std::string(stem) == "est" || std::string(stem) == "fisher" ? ".json" : ".csv";
        const auto a = slurp(dir / (stem + std::string("0") + ext));
        CHECK(!a.empty());
        CHECK(a == slurp(dir / (stem + std::string("1") + ext)));
    }
    for (const char* f : {"hist.csv", "overlay.csv"}) CHECK(slurp(dir / "hist0" / f) == slurp(dir / "hist1" / f));

    const auto table = slurp(dir / "table0.csv");
    CHECK(table.rfind("alpha,mean_estimate,empirical_stderr,theoretical_stderr,n_ok,n_fail\n", 0) == 0);
    std::size_t lines = 0;
    for (char ch : table) lines += ch == '\n';
    CHECK(lines == 4);
    CHECK(slurp(dir / "hist0" / "hist.csv").rfind("bin_left,bin_right,density\n", 0) == 0);
    CHECK(slurp(dir / "hist0" / "overlay.csv").rfind("x,pdf\n", 0) == 0);
    CHECK(slurp(dir / "conv0.csv").rfind("delta,mse,stderr\n", 0) == 0);
    CHECK(slurp(dir / "prof0.csv").rfind("theta,loglik\n", 0) == 0);

    CHECK(run_cli("simulate --example example1 --alpha 0 --seed 1 --delta -1 2> " + (dir / "err.txt").string()) != 0);
    CHECK(slurp(dir / "err.txt").find("delta") != std::string::npos);
    CHECK(run_cli("simulate --example example1 --alpha 0 --T 1 > /dev/null 2>&1") != 0);
    const std::string env_run = "MSFM_SEED=5 " + std::string(MSFM_CLI_PATH) +
                                " simulate --example example1 --alpha 0 --T 1 > /dev/null";
    CHECK(std::system(env_run.c_str()) == 0);
    fs::remove_all(dir);
}
