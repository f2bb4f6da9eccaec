#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "msfm/experiments.hpp"
#include "msfm/filters.hpp"
#include "msfm/simulate.hpp"

namespace msfm {

/// 15 significant digits, "%.15g".
std::string format_number(double value);

/// Header t followed by the path channels in order (t,Y,U,X for a multiscale path).
void write_path_csv(std::ostream& out, const Path& path);

/// Inverse of write_path_csv. The first column must be t on a uniform grid.
Path read_path_csv(std::istream& in);

enum class FilterColumns { Variance, Ess };

/// t,pi_h,sigma_hat or t,pi_h,ess.
void write_filter_csv(std::ostream& out, const FilterPath& filter, FilterColumns columns);

/// theta,loglik.
void write_profile_csv(std::ostream& out, std::span<const std::pair<double, double>> profile);

struct TableRow {
    double alpha = 0.0;
    McResult result;
};

/// alpha,mean_estimate,empirical_stderr,theoretical_stderr,n_ok,n_fail.
void write_table_csv(std::ostream& out, std::span<const TableRow> rows);

/// bin_left,bin_right,density.
void write_histogram_csv(std::ostream& out, const Histogram& histogram);

/// x,pdf.
void write_overlay_csv(std::ostream& out, const Histogram& histogram);

/// delta,mse,stderr.
void write_convergence_csv(std::ostream& out, std::span<const ConvergenceRow> rows);

}  // namespace msfm
