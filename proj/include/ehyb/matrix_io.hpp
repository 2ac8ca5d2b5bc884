#ifndef EHYB_MATRIX_IO_HPP
#define EHYB_MATRIX_IO_HPP

#include "types.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace ehyb {

struct CooEntry {
    index_t row = 0;
    index_t col = 0;
    double value = 0.0;

    friend bool operator==(const CooEntry&, const CooEntry&) = default;
};

/// Coordinate-format matrix. After ingestion the entries are sorted by
/// (row, col) and free of duplicates.
struct CooMatrix {
    index_t n_rows = 0;
    index_t n_cols = 0;
    std::vector<CooEntry> entries;

    std::size_t nnz() const { return entries.size(); }
    bool is_square() const { return n_rows == n_cols; }

    friend bool operator==(const CooMatrix&, const CooMatrix&) = default;
};

/// Compressed sparse row matrix, the oracle representation.
struct CsrMatrix {
    index_t n_rows = 0;
    index_t n_cols = 0;
    std::vector<index_t> row_ptr;
    std::vector<index_t> col_idx;
    std::vector<double> values;

    std::size_t nnz() const { return values.size(); }
};

/// Sorts entries by (row, col) and sums duplicates. Throws ValidationError
/// on out-of-range indices.
inline void normalize(CooMatrix& m) {
    for (const auto& e : m.entries) {
        if (e.row >= m.n_rows || e.col >= m.n_cols) {
            throw ValidationError("entry (" + std::to_string(e.row) + ", " + std::to_string(e.col) +
                                  ") outside " + std::to_string(m.n_rows) + "x" +
                                  std::to_string(m.n_cols));
        }
    }
    std::stable_sort(m.entries.begin(), m.entries.end(), [](const CooEntry& a, const CooEntry& b) {
        return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    std::size_t out = 0;
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        if (out > 0 && m.entries[out - 1].row == m.entries[i].row &&
            m.entries[out - 1].col == m.entries[i].col) {
            m.entries[out - 1].value += m.entries[i].value;
        } else {
            m.entries[out++] = m.entries[i];
        }
    }
    m.entries.resize(out);
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) tokens.push_back(line.substr(i, j - i));
        i = j;
    }
    return tokens;
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline std::uint64_t parse_count(std::string_view tok, std::size_t line_no, const char* what) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError(line_no, std::string("invalid ") + what + " '" + std::string(tok) + "'");
    }
    return v;
}

inline double parse_real(std::string_view tok, std::size_t line_no) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError(line_no, "invalid value '" + std::string(tok) + "'");
    }
    return v;
}

} // namespace detail

/// Reads a Matrix Market "matrix coordinate" stream (real, integer or
/// pattern; general or symmetric). Symmetric input is expanded, indices
/// become 0-based and duplicates are summed.
inline CooMatrix parse_matrix_market(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw ParseError(1, "empty input, expected %%MatrixMarket header");
    ++line_no;
    auto header = detail::split_ws(line);
    if (header.size() != 5 || detail::lower(header[0]) != "%%matrixmarket") {
        throw ParseError(line_no, "malformed header, expected '%%MatrixMarket matrix coordinate <field> <symmetry>'");
    }
    if (detail::lower(header[1]) != "matrix") {
        throw UnsupportedFormat("object '" + std::string(header[1]) + "' is not supported");
    }
    const auto format = detail::lower(header[2]);
    const auto field = detail::lower(header[3]);
    const auto symmetry = detail::lower(header[4]);
    if (format == "array") throw UnsupportedFormat("dense 'array' Matrix Market files are not supported");
    if (format != "coordinate") throw ParseError(line_no, "unknown format '" + format + "'");
    if (field == "complex") throw UnsupportedFormat("complex matrices are not supported");
    if (field != "real" && field != "integer" && field != "pattern" && field != "double") {
        throw ParseError(line_no, "unknown field '" + field + "'");
    }
    if (symmetry == "skew-symmetric" || symmetry == "hermitian") {
        throw UnsupportedFormat("symmetry '" + symmetry + "' is not supported");
    }
    if (symmetry != "general" && symmetry != "symmetric") {
        throw ParseError(line_no, "unknown symmetry '" + symmetry + "'");
    }
    const bool pattern = field == "pattern";
    const bool symmetric = symmetry == "symmetric";

    auto next_data_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '%') continue;
            return true;
        }
        return false;
    };

    if (!next_data_line()) throw ParseError(line_no + 1, "missing size line");
    auto size_tokens = detail::split_ws(line);
    if (size_tokens.size() != 3) throw ParseError(line_no, "size line must hold 'rows cols nnz'");
    const auto rows = detail::parse_count(size_tokens[0], line_no, "row count");
    const auto cols = detail::parse_count(size_tokens[1], line_no, "column count");
    const auto declared = detail::parse_count(size_tokens[2], line_no, "entry count");
    constexpr auto max_index = std::numeric_limits<index_t>::max();
    if (rows >= max_index || cols >= max_index) throw ValidationError("matrix dimensions exceed index range");

    CooMatrix m;
    m.n_rows = static_cast<index_t>(rows);
    m.n_cols = static_cast<index_t>(cols);
    m.entries.reserve(symmetric ? 2 * declared : declared);

    for (std::uint64_t k = 0; k < declared; ++k) {
        if (!next_data_line()) {
            throw ParseError(line_no + 1, "expected " + std::to_string(declared) + " entries, found " +
                                              std::to_string(k));
        }
        auto tok = detail::split_ws(line);
        const std::size_t expected = pattern ? 2 : 3;
        if (tok.size() < expected) throw ParseError(line_no, "entry has too few fields");
        const auto r = detail::parse_count(tok[0], line_no, "row index");
        const auto c = detail::parse_count(tok[1], line_no, "column index");
        if (r < 1 || r > rows || c < 1 || c > cols) {
            throw ValidationError("line " + std::to_string(line_no) + ": entry (" + std::to_string(r) + ", " +
                                  std::to_string(c) + ") outside declared " + std::to_string(rows) + "x" +
                                  std::to_string(cols));
        }
        const double v = pattern ? 1.0 : detail::parse_real(tok[2], line_no);
        const auto row = static_cast<index_t>(r - 1);
        const auto col = static_cast<index_t>(c - 1);
        m.entries.push_back({row, col, v});
        if (symmetric && row != col) m.entries.push_back({col, row, v});
    }
    normalize(m);
    return m;
}

/// Writes a general real coordinate file with round-trip precision.
inline void write_matrix_market(const CooMatrix& m, std::ostream& out) {
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << m.n_rows << ' ' << m.n_cols << ' ' << m.nnz() << '\n';
    char buf[64];
    for (const auto& e : m.entries) {
        std::snprintf(buf, sizeof(buf), "%.17g", e.value);
        out << (e.row + 1) << ' ' << (e.col + 1) << ' ' << buf << '\n';
    }
}

inline CsrMatrix coo_to_csr(const CooMatrix& m) {
    CooMatrix sorted = m;
    normalize(sorted);

    CsrMatrix csr;
    csr.n_rows = m.n_rows;
    csr.n_cols = m.n_cols;
    csr.row_ptr.assign(static_cast<std::size_t>(m.n_rows) + 1, 0);
    csr.col_idx.reserve(sorted.nnz());
    csr.values.reserve(sorted.nnz());
    for (const auto& e : sorted.entries) {
        ++csr.row_ptr[e.row + 1];
        csr.col_idx.push_back(e.col);
        csr.values.push_back(e.value);
    }
    for (std::size_t r = 0; r < m.n_rows; ++r) csr.row_ptr[r + 1] += csr.row_ptr[r];
    return csr;
}

inline CooMatrix csr_to_coo(const CsrMatrix& csr) {
    CooMatrix m;
    m.n_rows = csr.n_rows;
    m.n_cols = csr.n_cols;
    m.entries.reserve(csr.nnz());
    for (index_t r = 0; r < csr.n_rows; ++r) {
        for (auto k = csr.row_ptr[r]; k < csr.row_ptr[r + 1]; ++k) {
            m.entries.push_back({r, csr.col_idx[k], csr.values[k]});
        }
    }
    return m;
}

} // namespace ehyb

#endif // EHYB_MATRIX_IO_HPP
