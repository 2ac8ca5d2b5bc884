#ifndef EHYB_REPORT_HPP
#define EHYB_REPORT_HPP

#include "matrix_io.hpp"
#include "types.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace ehyb {

/// Deterministic test vectors with entries in [-1, 1):
///   state <- state * 6364136223846793005 + 1442695040888963407  (mod 2^64)
///   value <- 2 * (state >> 11) / 2^53 - 1
/// The state starts at `seed` and is advanced before each value.
class Lcg {
public:
    explicit Lcg(std::uint64_t seed) : state_(seed) {}

    double next() {
        state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
        return 2.0 * static_cast<double>(state_ >> 11) * 0x1.0p-53 - 1.0;
    }

private:
    std::uint64_t state_;
};

inline std::vector<double> lcg_vector(std::size_t n, std::uint64_t seed) {
    Lcg rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.next();
    return v;
}

/// max_i |y_i - ref_i| / max_i |ref_i|; absolute error when ref is zero.
template <typename T>
double max_relative_error(std::span<const T> y, std::span<const double> ref) {
    if (y.size() != ref.size()) throw DimensionMismatch("vectors differ in length");
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        err = std::max(err, std::abs(static_cast<double>(y[i]) - ref[i]));
        scale = std::max(scale, std::abs(ref[i]));
    }
    return scale > 0.0 ? err / scale : err;
}

struct KernelTiming {
    std::string kernel;
    double median_seconds = 0.0;
    double gflops = 0.0;

    friend bool operator==(const KernelTiming&, const KernelTiming&) = default;
};

struct BenchReport {
    std::string matrix;
    std::uint64_t dimension = 0;
    std::uint64_t nnz = 0;
    std::uint64_t n_parts = 0;
    std::uint64_t vec_cache_size = 0;
    double inner_fraction = 0.0;
    std::uint64_t ell_nnz = 0;
    std::uint64_t er_nnz = 0;
    std::uint64_t footprint_bytes = 0;
    double slot_savings = 0.0;
    std::string precision;
    std::uint64_t workers = 1;
    std::uint64_t reps = 0;
    std::uint64_t warmup = 0;
    double partition_seconds = 0.0;
    double assemble_seconds = 0.0;
    /// (partition + assemble) / median EHYB SpMV time.
    double preprocessing_ratio = 0.0;
    std::vector<KernelTiming> kernels;

    friend bool operator==(const BenchReport&, const BenchReport&) = default;
};

inline double gflops(std::uint64_t nnz, double seconds) {
    return seconds > 0.0 ? 2.0 * static_cast<double>(nnz) / seconds * 1e-9 : 0.0;
}

inline constexpr const char* bench_csv_schema = "ehyb-bench/1";

namespace detail {

inline constexpr const char* bench_csv_columns[] = {
    "schema",         "matrix",         "dimension",         "nnz",        "n_parts",     "vec_cache_size",
    "inner_fraction", "ell_nnz",        "er_nnz",            "footprint_bytes", "slot_savings", "precision",
    "workers",        "reps",           "warmup",            "partition_seconds", "assemble_seconds",
    "preprocessing_ratio", "kernel",    "median_seconds",    "gflops"};

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    if (quoted) throw ParseError(line_no, "unterminated quoted field");
    fields.push_back(std::move(cur));
    return fields;
}

} // namespace detail

/// One CSV row per kernel; report-level columns repeat on every row.
inline void write_bench_csv(const BenchReport& r, std::ostream& out) {
    bool first = true;
    for (auto* c : detail::bench_csv_columns) {
        out << (first ? "" : ",") << c;
        first = false;
    }
    out << '\n';
    for (const auto& k : r.kernels) {
        out << bench_csv_schema << ',' << detail::csv_field(r.matrix) << ',' << r.dimension << ',' << r.nnz << ','
            << r.n_parts << ',' << r.vec_cache_size << ',' << detail::fmt_double(r.inner_fraction) << ','
            << r.ell_nnz << ',' << r.er_nnz << ',' << r.footprint_bytes << ',' << detail::fmt_double(r.slot_savings)
            << ',' << detail::csv_field(r.precision) << ',' << r.workers << ',' << r.reps << ',' << r.warmup << ','
            << detail::fmt_double(r.partition_seconds) << ',' << detail::fmt_double(r.assemble_seconds) << ','
            << detail::fmt_double(r.preprocessing_ratio) << ',' << detail::csv_field(k.kernel) << ','
            << detail::fmt_double(k.median_seconds) << ',' << detail::fmt_double(k.gflops) << '\n';
    }
}

inline BenchReport read_bench_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw ParseError(1, "missing CSV header");
    const auto header = detail::split_csv_line(line, line_no);
    const std::size_t n_cols = std::size(detail::bench_csv_columns);
    if (header.size() != n_cols) throw ParseError(1, "unexpected CSV header");
    for (std::size_t i = 0; i < n_cols; ++i) {
        if (header[i] != detail::bench_csv_columns[i]) throw ParseError(1, "unexpected column '" + header[i] + "'");
    }

    BenchReport r;
    bool any = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line, line_no);
        if (f.size() != n_cols) throw ParseError(line_no, "expected " + std::to_string(n_cols) + " fields");
        if (f[0] != bench_csv_schema) throw ParseError(line_no, "unsupported schema '" + f[0] + "'");
        auto u = [&](std::size_t i) { return detail::parse_count(f[i], line_no, detail::bench_csv_columns[i]); };
        auto d = [&](std::size_t i) { return detail::parse_real(f[i], line_no); };
        BenchReport row;
        row.matrix = f[1];
        row.dimension = u(2);
        row.nnz = u(3);
        row.n_parts = u(4);
        row.vec_cache_size = u(5);
        row.inner_fraction = d(6);
        row.ell_nnz = u(7);
        row.er_nnz = u(8);
        row.footprint_bytes = u(9);
        row.slot_savings = d(10);
        row.precision = f[11];
        row.workers = u(12);
        row.reps = u(13);
        row.warmup = u(14);
        row.partition_seconds = d(15);
        row.assemble_seconds = d(16);
        row.preprocessing_ratio = d(17);
        if (!any) {
            r = row;
            any = true;
        } else {
            auto kernels = std::move(r.kernels);
            r.kernels.clear();
            if (!(r == row)) throw ParseError(line_no, "report columns differ between kernel rows");
            r.kernels = std::move(kernels);
        }
        r.kernels.push_back({f[18], d(19), d(20)});
    }
    if (!any) throw ParseError(line_no, "CSV holds no kernel rows");
    return r;
}

inline nlohmann::json to_json(const BenchReport& r) {
    nlohmann::json kernels = nlohmann::json::array();
    for (const auto& k : r.kernels) {
        kernels.push_back({{"kernel", k.kernel}, {"median_seconds", k.median_seconds}, {"gflops", k.gflops}});
    }
    return {{"schema", bench_csv_schema},
            {"matrix", r.matrix},
            {"dimension", r.dimension},
            {"nnz", r.nnz},
            {"n_parts", r.n_parts},
            {"vec_cache_size", r.vec_cache_size},
            {"inner_fraction", r.inner_fraction},
            {"ell_nnz", r.ell_nnz},
            {"er_nnz", r.er_nnz},
            {"footprint_bytes", r.footprint_bytes},
            {"slot_savings", r.slot_savings},
            {"precision", r.precision},
            {"workers", r.workers},
            {"reps", r.reps},
            {"warmup", r.warmup},
            {"partition_seconds", r.partition_seconds},
            {"assemble_seconds", r.assemble_seconds},
            {"preprocessing_ratio", r.preprocessing_ratio},
            {"kernels", kernels}};
}

} // namespace ehyb

#endif // EHYB_REPORT_HPP
