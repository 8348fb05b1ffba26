#pragma once

// CSV output. Doubles use the shortest round-trip representation so equal
// values always print identically.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wdbounds/bounds.hpp"
#include "wdbounds/processes.hpp"

namespace wdb {

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// RFC 4180: quote fields containing separators, quotes or line breaks.
inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline void write_csv_row(std::ostream& os, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) os << ',';
        os << csv_field(fields[i]);
    }
    os << "\r\n";
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    return os;
}

inline void check_stream(const std::ostream& os, const std::string& path) {
    if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

inline void write_profile_csv(std::ostream& os, const DependenceProfile& p) {
    write_csv_row(os, {"r", "delta", "kind"});
    for (std::size_t r = 1; r <= p.n(); ++r) write_csv_row(os, {std::to_string(r), format_double(p(r)), to_string(p.kind())});
}

inline void write_trajectory_csv(std::ostream& os, std::span<const double> xs) {
    write_csv_row(os, {"t", "x_t"});
    for (std::size_t t = 0; t < xs.size(); ++t) write_csv_row(os, {std::to_string(t + 1), format_double(xs[t])});
}

inline void write_coupled_block_csv(std::ostream& os, const CoupledBlock& b) {
    write_csv_row(os, {"i", "x_i", "x_star_i", "dist"});
    for (std::size_t m = 0; m < b.original.size(); ++m) {
        const std::size_t i = b.r + b.j + m;
        write_csv_row(os, {std::to_string(i), format_double(b.original[m]), format_double(b.starred[m]),
                           format_double(std::fabs(b.original[m] - b.starred[m]))});
    }
}

// Estimation rows: (model, f, k or n, statistic, estimate, se_or_ci_low, ci_high, reps, seed)
struct EstimationRow {
    std::string model;
    std::string f;
    std::size_t k_or_n = 0;
    std::string statistic;
    double estimate = 0.0;
    std::optional<double> se_or_ci_low;
    std::optional<double> ci_high;  // empty for standard-error rows
    std::size_t reps = 0;
    std::uint64_t seed = 0;
};

inline void write_estimation_header(std::ostream& os) {
    write_csv_row(os, {"model", "f", "k_or_n", "statistic", "estimate", "se_or_ci_low", "ci_high", "reps", "seed"});
}

inline void write_estimation_row(std::ostream& os, const EstimationRow& r) {
    write_csv_row(os, {r.model, r.f, std::to_string(r.k_or_n), r.statistic, format_double(r.estimate),
                       r.se_or_ci_low ? format_double(*r.se_or_ci_low) : "",
                       r.ci_high ? format_double(*r.ci_high) : "", std::to_string(r.reps), std::to_string(r.seed)});
}

}  // namespace wdb
