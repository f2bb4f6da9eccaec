#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace msfm {

/// Probabilists' Gauss-Hermite rule: E[f(Z)] ~= sum_i weights[i] * f(nodes[i])
/// for Z ~ N(0,1). Weights sum to one.
struct HermiteRule {
    std::span<const double> nodes;
    std::span<const double> weights;
};

/// Rule with `n` nodes (1 <= n <= kMaxHermiteNodes). Computed once and cached.
HermiteRule hermite_rule(std::size_t n);

inline constexpr std::size_t kMaxHermiteNodes = 200;
inline constexpr std::size_t kInitialHermiteNodes = 4;

struct QuadratureResult {
    double value = 0.0;
    std::size_t nodes = 0;
};

/// E[f(mean + sd*Z)] with node doubling (4, 8, ..., 128, 200) until two
/// successive estimates agree to `rel_tol`. Throws QuadratureError when the
/// cap is reached without agreement.
QuadratureResult gaussian_expectation(const std::function<double(double)>& f, double mean,
                                      double sd, double rel_tol = 1e-10);

}  // namespace msfm
