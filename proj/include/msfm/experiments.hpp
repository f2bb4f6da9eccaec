#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "msfm/model.hpp"

namespace msfm {

struct McConfig {
    ExampleTag example = ExampleTag::Example1;
    double true_alpha = 0.0;
    std::size_t n_replicates = 500;
    double T = 25.0;
    double delta = 0.01;
    double dt = 0.02;
    double Sigma = 0.1;
    double sigma = 0.1;
    ThetaBounds bounds = default_bounds(ExampleTag::Example1);
    std::uint64_t root_seed = 1;
    unsigned jobs = 1;
    std::size_t n_bins = 25;
    /// Horizon of the numeric Fisher information (Example3 only).
    double fisher_T = 2000.0;
    /// Give every replicate the root seed itself (degenerate replication).
    bool identical_seeds = false;

    /// n_replicates >= 2, T/dt integral, positive scales.
    void validate() const;
};

struct Histogram {
    std::vector<double> bin_left;
    std::vector<double> bin_right;
    std::vector<double> density;
    /// Normal overlay N(alpha, stderr^2) on 201 points.
    std::vector<double> overlay_x;
    std::vector<double> overlay_pdf;
};

struct McResult {
    std::vector<double> estimates;
    std::size_t n_ok = 0;
    std::size_t n_fail = 0;
    std::size_t n_clamped = 0;
    double mean_estimate = 0.0;
    double empirical_stderr = 0.0;
    double theoretical_stderr = 0.0;
    Histogram histogram;
};

/// Per replicate: simulate the full system at true_alpha, maximize the reduced likelihood.
/// Failed replicates are dropped and counted; more than 5% failures throws.
McResult run_mc_study(const McConfig& config);

/// Theoretical standard error at alpha for horizon T: closed-form Fisher for linear
/// examples, numeric Fisher for Example3.
double theoretical_stderr_for(const McConfig& config);

struct ConvergenceOptions {
    std::size_t n_particles = 2000;
    std::size_t n_replicates = 50;
    double T = 25.0;
    double dt = 0.02;
    std::uint64_t root_seed = 1;
    unsigned jobs = 1;
};

struct ConvergenceRow {
    double delta = 0.0;
    double mse = 0.0;
    double stderr = 0.0;
};

/// For each delta: replicate mean of (1/T) int (pi^PF_t[h] - pi-bar_t[h-bar])^2 dt, where
/// the particle filter runs on the full model with that delta and the (sampled-data)
/// Kalman filter on the reduced model, both on the same simulated observations at alpha.
/// Rows use independent seeds.
std::vector<ConvergenceRow> filter_convergence_study(const ModelSpec& base, double alpha,
                                                     std::span<const double> deltas,
                                                     const ConvergenceOptions& options);

/// Density histogram over [min, max] of the estimates plus the normal overlay.
Histogram histogram_with_normal_overlay(std::span<const double> estimates, double alpha, double stderr,
                                        std::size_t n_bins);

/// Kolmogorov-Smirnov distance between the empirical CDF and N(mean, sd^2).
double ks_statistic(std::span<const double> sample, double mean, double sd);

}  // namespace msfm
