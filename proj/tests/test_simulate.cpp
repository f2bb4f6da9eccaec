#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "msfm/error.hpp"
#include "msfm/model.hpp"
#include "msfm/rng.hpp"
#include "msfm/simulate.hpp"

using namespace msfm;

namespace {

struct Moments {
    double mean = 0.0;
    double var = 0.0;
};

Moments moments(const std::vector<double>& v, std::size_t from = 0) {
    Moments m;
    const double n = static_cast<double>(v.size() - from);
    for (std::size_t i = from; i < v.size(); ++i) m.mean += v[i];
    m.mean /= n;
    for (std::size_t i = from; i < v.size(); ++i) m.var += (v[i] - m.mean) * (v[i] - m.mean);
    m.var /= n - 1.0;
    return m;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
    return s;
}

}  // namespace

TEST_CASE("grid and path bookkeeping") {
    CHECK(grid_steps(25.0, 0.02) == 1250);
    CHECK_THROWS_AS(grid_steps(1.0, 0.3), InvalidArgument);
    CHECK_THROWS_AS(grid_steps(0.01, 0.02), InvalidArgument);
    CHECK_THROWS_AS(grid_steps(1.0, 0.0), InvalidArgument);

    auto path = simulate_multiscale(make_example(ExampleTag::Example1), 0.0, 1.0, 0.02, 3);
    CHECK(path.size() == 51);
    CHECK(path.horizon() == doctest::Approx(1.0));
    CHECK(path.channels.size() == 3);
    CHECK(path.channels[0].first == "Y");
    CHECK(path.channels[1].first == "U");
    CHECK(path.channels[2].first == "X");
    CHECK(path.channel("Y")[0] == 0.0);
    CHECK_THROWS_AS(path.channel("Z"), InvalidArgument);
    path.channel("U")[4] = std::nan("");
    CHECK_THROWS_AS(path.validate(), InstabilityError);
}

TEST_CASE("noise-free system stays at its fixed point") {
    auto m = make_example(ExampleTag::Example1);
    m.tau = [](double, double, double) { return 0.0; };
    m.sigma = [](double, double, double) { return 0.0; };
    m.fast_sigma = 0.0;
    m.Sigma = 1e-300;
    auto path = simulate_multiscale(m, 0.0, 5.0, 0.02, 11, InitialState{0.0, 0.0});
    for (const auto& name : {"Y", "U", "X"})
        for (double v : path.channel(name)) CHECK(std::abs(v) < 1e-250);
}

TEST_CASE("identical seeds give identical paths") {
    auto m = make_example(ExampleTag::Example2);
    auto a = simulate_multiscale(m, 1.0, 5.0, 0.02, 99);
    auto b = simulate_multiscale(m, 1.0, 5.0, 0.02, 99);
    auto c = simulate_multiscale(m, 1.0, 5.0, 0.02, 100);
    for (const auto& name : {"Y", "U", "X"}) {
        CHECK(a.channel(name) == b.channel(name));
        CHECK(a.channel(name) != c.channel(name));
    }
    auto ch = make_example(ExampleTag::Example3);
    CHECK(simulate_multiscale(ch, 1.0, 5.0, 0.02, 5).channel("Y") == simulate_multiscale(ch, 1.0, 5.0, 0.02, 5).channel("Y"));
}

TEST_CASE("fast component has the invariant variance") {
    auto m = make_example(ExampleTag::Example1);
    auto path = simulate_multiscale(m, 0.0, 500.0, 0.02, 2024);
    auto x = moments(path.channel("X"));
    auto mu = invariant_measure_ou(0.0, 0.1);
    CHECK(std::abs(x.var - mu.variance) <= 0.05 * mu.variance);
    CHECK(std::abs(x.mean) < 0.01);
}

TEST_CASE("initial slow state follows the stationary filter law") {
    auto m = make_example(ExampleTag::Example1);
    auto reduced = reduce(m);
    const double var = m.Sigma * m.Sigma * reduced.zeta(0.5) / std::pow(reduced.abar(0.5), 2);
    std::vector<double> u0;
    for (std::uint64_t s = 0; s < 4000; ++s) {
        auto engine = make_engine(derive_seed(7, s), Stream::Initial);
        u0.push_back(draw_initial_state(m, 0.5, engine).second);
    }
    auto mo = moments(u0);
    CHECK(std::abs(mo.mean) <= 3.0 * std::sqrt(var / 4000.0));
    CHECK(std::abs(mo.var - var) <= 3.0 * var * std::sqrt(2.0 / 4000.0));

    auto chain = make_example(ExampleTag::Example3);
    int ones = 0;
    for (std::uint64_t s = 0; s < 2000; ++s) {
        auto engine = make_engine(derive_seed(8, s), Stream::Initial);
        double u = draw_initial_state(chain, 1.0, engine).second;
        CHECK((u == 0.0 || u == 1.0));
        ones += u == 1.0;
    }
    CHECK(std::abs(ones - 1000) <= 3.0 * std::sqrt(500.0));
}

TEST_CASE("reduced simulation") {
    auto quiet = make_reduced([](double) { return 1.0; }, [](double) { return 1.0; }, [](double) { return 0.0; }, 0.3);
    auto path = simulate_reduced(quiet, 0.0, 10.0, 0.01, 4, InitialState{std::nullopt, 0.0});
    for (double u : path.channel("U")) CHECK(u == 0.0);
    const auto& y = path.channel("Y");
    std::vector<double> dy(y.size() - 1);
    for (std::size_t k = 0; k + 1 < y.size(); ++k) dy[k] = y[k + 1] - y[k];
    auto m = moments(dy);
    CHECK(std::abs(m.var / (0.09 * 0.01) - 1.0) < 3.0 * std::sqrt(2.0 / 1000.0));

    // Stationary OU variance gamma^2 / (2 betabar).
    auto ou = make_reduced([](double) { return 1.0; }, [](double) { return 2.0; }, [](double) { return 1.5; }, 0.1);
    auto long_path = simulate_reduced(ou, 0.0, 5000.0, 0.02, 17);
    auto u = moments(long_path.channel("U"));
    CHECK(std::abs(u.var - 1.5 * 1.5 / 4.0) <= 0.05 * 1.5 * 1.5 / 4.0);
}

TEST_CASE("multiscale observations approach the reduced ones as delta shrinks") {
    // Same seed couples the observation and slow noises of the two systems.
    const std::uint64_t reps = 10;
    std::vector<double> sup(3, 0.0);
    const double deltas[] = {0.1, 0.04, 0.01};
    for (std::uint64_t r = 0; r < reps; ++r) {
        const std::uint64_t seed = derive_seed(31, r);
        ExampleParams base;
        auto reduced = reduce(make_example(ExampleTag::Example1, base));
        auto ybar = simulate_reduced(reduced, 0.0, 5.0, 0.001, seed).channel("Y");
        for (int i = 0; i < 3; ++i) {
            ExampleParams p;
            p.delta = deltas[i];
            auto y = simulate_multiscale(make_example(ExampleTag::Example1, p), 0.0, 5.0, 0.001, seed).channel("Y");
            sup[i] += sup_diff(y, ybar) / static_cast<double>(reps);
        }
    }
    MESSAGE("sup |Y - Ybar|: " << sup[0] << " " << sup[1] << " " << sup[2]);
    CHECK(sup[1] < sup[0]);
    CHECK(sup[2] < sup[1]);
}

TEST_CASE("Euler substepping converges strongly to the exact OU transition") {
    // Fine Brownian increments drive both schemes; exact transitions on the finest grid are the reference.
    const double delta = 0.01, sigma = 0.1, theta = 0.2, T = 1.0, dt = 0.02;
    const std::size_t fine = 256, steps = static_cast<std::size_t>(T / dt + 0.5);
    const std::size_t levels[] = {8, 16, 32};
    std::vector<double> err(3, 0.0);
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
        NormalSource z(derive_seed(5, rep), Stream::Fast);
        std::vector<double> dB(steps * fine);
        const double h = dt / static_cast<double>(fine);
        for (auto& v : dB) v = std::sqrt(h) * z();
        std::vector<double> ref(steps + 1, 0.3);
        double x = 0.3;
        const double a = std::exp(-h / delta);
        for (std::size_t k = 0; k < steps * fine; ++k) {
            // Exact step with the increment rescaled to the exact conditional variance.
            x = theta + (x - theta) * a + sigma * std::sqrt((1 - a * a) / 2.0) * dB[k] / std::sqrt(h);
            if ((k + 1) % fine == 0) ref[(k + 1) / fine] = x;
        }
        for (int l = 0; l < 3; ++l) {
            const std::size_t sub = levels[l], block = fine / sub;
            const double hs = dt / static_cast<double>(sub);
            double xe = 0.3, worst = 0.0;
            for (std::size_t j = 0; j < steps * sub; ++j) {
                double inc = 0.0;
                for (std::size_t i = 0; i < block; ++i) inc += dB[j * block + i];
                xe += (theta - xe) * hs / delta + sigma / std::sqrt(delta) * inc;
                if ((j + 1) % sub == 0) worst = std::max(worst, std::abs(xe - ref[(j + 1) / sub]));
            }
            err[l] += worst / 20.0;
        }
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int l = 0; l < 3; ++l) {
        double lx = std::log(dt / static_cast<double>(levels[l])), ly = std::log(err[l]);
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    }
    const double slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
    MESSAGE("strong order slope " << slope);
    CHECK(slope >= 0.7);
    CHECK(slope <= 1.3);
}

TEST_CASE("Euler substeps are used for non-OU fast dynamics") {
    auto m = make_example(ExampleTag::Example1);
    m.ou_center = nullptr;
    HiddenStepper stepper(m, 0.0, 0.02);
    CHECK(stepper.fast_substeps() == 20);
    auto path = simulate_multiscale(m, 0.0, 200.0, 0.02, 8);
    auto x = moments(path.channel("X"));
    CHECK(std::abs(x.var - 0.005) <= 0.1 * 0.005);
}

TEST_CASE("observation quadratic variation") {
    ExampleParams p;
    p.Sigma = 0.5;
    auto path = simulate_multiscale(make_example(ExampleTag::Example1, p), 0.0, 25.0, 0.002, 77);
    const auto& y = path.channel("Y");
    double qv = 0.0;
    for (std::size_t k = 0; k + 1 < y.size(); ++k) qv += (y[k + 1] - y[k]) * (y[k + 1] - y[k]);
    CHECK(std::abs(qv - 0.25 * 25.0) <= 0.05 * 0.25 * 25.0);
}

TEST_CASE("continuous-time chain") {
    auto still = simulate_ctmc(0.0, 10.0, 0.01, 1, 1.0);
    for (double u : still.channel("U")) CHECK(u == 1.0);

    // Batch means over a long run give the standard error of the occupation fraction.
    auto path = simulate_ctmc(1.0, 10000.0, 0.01, 2);
    const auto& u = path.channel("U");
    const std::size_t batches = 100, len = u.size() / batches;
    std::vector<double> frac(batches, 0.0);
    for (std::size_t b = 0; b < batches; ++b) {
        for (std::size_t i = 0; i < len; ++i) frac[b] += u[b * len + i];
        frac[b] /= static_cast<double>(len);
    }
    auto fm = moments(frac);
    CHECK(std::abs(fm.mean - 0.5) <= 3.0 * std::sqrt(fm.var / batches));
    for (double v : u) CHECK((v == 0.0 || v == 1.0));

    // Jumps over [0, T] at a fine grid, 200 replicates.
    const double theta = 2.0, T = 5.0;
    std::vector<double> counts;
    for (std::uint64_t r = 0; r < 200; ++r) {
        auto c = simulate_ctmc(theta, T, 0.0005, derive_seed(3, r)).channel("U");
        double jumps = 0.0;
        for (std::size_t k = 0; k + 1 < c.size(); ++k) jumps += c[k + 1] != c[k];
        counts.push_back(jumps);
    }
    auto cm = moments(counts);
    CHECK(std::abs(cm.mean - theta * T) <= 3.0 * std::sqrt(cm.var / 200.0));
    CHECK_THROWS_AS(simulate_ctmc(-1.0, 1.0, 0.1, 1), InvalidArgument);
}

TEST_CASE("blow-up is reported with its step") {
    auto m = make_example(ExampleTag::Example1);
    m.g = [](double, double u, double) { return u * u * u; };
    try {
        simulate_multiscale(m, 0.0, 25.0, 0.02, 1, InitialState{0.0, 5.0});
        FAIL("expected an instability");
    } catch (const InstabilityError& e) {
        CHECK(e.step() > 0);
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}
