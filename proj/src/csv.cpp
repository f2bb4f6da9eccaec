#include "msfm/csv.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "msfm/error.hpp"

namespace msfm {

namespace {

void write_row(std::ostream& out, std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
        if (!first) out << ',';
        out << format_number(v);
        first = false;
    }
    out << '\n';
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_field(const std::string& text, std::size_t line_no) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size())
        throw InvalidArgument("csv line " + std::to_string(line_no) + ": malformed number '" + text + "'");
    return value;
}

}  // namespace

std::string format_number(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", value);
    return buf;
}

void write_path_csv(std::ostream& out, const Path& path) {
    out << 't';
    for (const auto& [name, values] : path.channels) out << ',' << name;
    out << '\n';
    for (std::size_t k = 0; k < path.size(); ++k) {
        out << format_number(path.time(k));
        for (const auto& channel : path.channels) out << ',' << format_number(channel.second[k]);
        out << '\n';
    }
}

Path read_path_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split(line);
    if (header.size() < 2 || header[0] != "t") throw InvalidArgument("csv: header must start with t");

    std::vector<double> t;
    std::vector<std::vector<double>> columns(header.size() - 1);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line);
        if (fields.size() != header.size())
            throw InvalidArgument("csv line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " fields");
        t.push_back(parse_field(fields[0], line_no));
        for (std::size_t j = 1; j < fields.size(); ++j) columns[j - 1].push_back(parse_field(fields[j], line_no));
    }
    if (t.size() < 2) throw InvalidArgument("csv: need at least two rows");

    Path path;
    path.t0 = t.front();
    path.n_steps = t.size() - 1;
    path.dt = (t.back() - t.front()) / static_cast<double>(path.n_steps);
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (std::abs(path.time(k) - t[k]) > 1e-9 * std::max(1.0, std::abs(t[k])))
            throw InvalidArgument("csv: time column is not a uniform grid (row " + std::to_string(k + 2) + ")");
    }
    for (std::size_t j = 1; j < header.size(); ++j) path.set_channel(header[j], std::move(columns[j - 1]));
    path.validate();
    return path;
}

void write_filter_csv(std::ostream& out, const FilterPath& filter, FilterColumns columns) {
    const auto& second = columns == FilterColumns::Ess ? filter.ess : filter.sigma_hat;
    if (second.size() != filter.pi_h.size())
        throw InvalidArgument(columns == FilterColumns::Ess ? "filter output has no ess column"
                                                            : "filter output has no sigma_hat column");
    out << (columns == FilterColumns::Ess ? "t,pi_h,ess\n" : "t,pi_h,sigma_hat\n");
    for (std::size_t k = 0; k < filter.pi_h.size(); ++k)
        write_row(out, {filter.t0 + filter.dt * static_cast<double>(k), filter.pi_h[k], second[k]});
}

void write_profile_csv(std::ostream& out, std::span<const std::pair<double, double>> profile) {
    out << "theta,loglik\n";
    for (const auto& [theta, loglik] : profile) write_row(out, {theta, loglik});
}

void write_table_csv(std::ostream& out, std::span<const TableRow> rows) {
    out << "alpha,mean_estimate,empirical_stderr,theoretical_stderr,n_ok,n_fail\n";
    for (const auto& row : rows) {
        out << format_number(row.alpha) << ',' << format_number(row.result.mean_estimate) << ','
            << format_number(row.result.empirical_stderr) << ',' << format_number(row.result.theoretical_stderr)
            << ',' << row.result.n_ok << ',' << row.result.n_fail << '\n';
    }
}

void write_histogram_csv(std::ostream& out, const Histogram& histogram) {
    out << "bin_left,bin_right,density\n";
    for (std::size_t i = 0; i < histogram.density.size(); ++i)
        write_row(out, {histogram.bin_left[i], histogram.bin_right[i], histogram.density[i]});
}

void write_overlay_csv(std::ostream& out, const Histogram& histogram) {
    out << "x,pdf\n";
    for (std::size_t i = 0; i < histogram.overlay_x.size(); ++i)
        write_row(out, {histogram.overlay_x[i], histogram.overlay_pdf[i]});
}

void write_convergence_csv(std::ostream& out, std::span<const ConvergenceRow> rows) {
    out << "delta,mse,stderr\n";
    for (const auto& row : rows) write_row(out, {row.delta, row.mse, row.stderr});
}

}  // namespace msfm
