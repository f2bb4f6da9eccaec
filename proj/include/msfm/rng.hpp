#pragma once

#include <cstdint>
#include <random>

namespace msfm {

using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of replicate `index` under `root`. Distinct indices give unrelated streams.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

/// Independent noise sources of one simulation. Using the same seed in two
/// simulations couples the corresponding Brownian motions.
enum class Stream : std::uint64_t {
    Initial = 1,
    Observation = 2,
    Slow = 3,
    Fast = 4,
    Chain = 5,
    Particles = 6,
};

Engine make_engine(std::uint64_t seed, Stream stream);

class NormalSource {
public:
    NormalSource(std::uint64_t seed, Stream stream) : engine_(make_engine(seed, stream)) {}

    double operator()() { return dist_(engine_); }
    Engine& engine() { return engine_; }

private:
    Engine engine_;
    std::normal_distribution<double> dist_;
};

}  // namespace msfm
