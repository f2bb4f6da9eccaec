#include "msfm/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "msfm/error.hpp"

namespace msfm {
namespace {

struct StoredRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials:
// zero diagonal, off-diagonal sqrt(k).
StoredRule build_rule(std::size_t n) {
    StoredRule rule;
    if (n == 1) {
        rule.nodes = {0.0};
        rule.weights = {1.0};
        return rule;
    }
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd sub(static_cast<Eigen::Index>(n - 1));
    for (std::size_t k = 1; k < n; ++k) sub(static_cast<Eigen::Index>(k - 1)) = std::sqrt(double(k));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const auto& values = solver.eigenvalues();
    const auto& vectors = solver.eigenvectors();

    rule.nodes.resize(n);
    rule.weights.resize(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        rule.nodes[i] = values(idx);
        rule.weights[i] = vectors(0, idx) * vectors(0, idx);
        total += rule.weights[i];
    }
    for (double& w : rule.weights) w /= total;
    return rule;
}

}  // namespace

HermiteRule hermite_rule(std::size_t n) {
    if (n == 0 || n > kMaxHermiteNodes)
        throw InvalidArgument("hermite_rule: node count must be in [1, 200]");

    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<StoredRule>> cache;

    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<StoredRule>(build_rule(n));
    return {slot->nodes, slot->weights};
}

QuadratureResult gaussian_expectation(const std::function<double(double)>& f, double mean,
                                      double sd, double rel_tol) {
    if (!(sd >= 0.0)) throw InvalidArgument("gaussian_expectation: sd must be >= 0");
    if (sd == 0.0) return {f(mean), 1};

    auto apply = [&](std::size_t n, double& scale) {
        const HermiteRule rule = hermite_rule(n);
        double sum = 0.0;
        scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = f(mean + sd * rule.nodes[i]);
            sum += rule.weights[i] * v;
            scale += rule.weights[i] * std::abs(v);
        }
        return sum;
    };

    double scale = 0.0;
    std::size_t n = kInitialHermiteNodes;
    double previous = apply(n, scale);
    while (n < kMaxHermiteNodes) {
        n = std::min(2 * n, kMaxHermiteNodes);
        const double current = apply(n, scale);
        if (!std::isfinite(current)) break;
        if (std::abs(current - previous) <= rel_tol * std::abs(current) + 1e-15 * scale)
            return {current, n};
        previous = current;
    }
    throw QuadratureError("Gauss-Hermite averaging did not converge within 200 nodes; "
                          "integrand is not admissible for this measure");
}

}  // namespace msfm
