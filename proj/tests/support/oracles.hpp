#ifndef EHYB_TESTS_ORACLES_HPP
#define EHYB_TESTS_ORACLES_HPP

// Independent reference computations used by the unit and acceptance
// suites. None of these call into the code paths they check.

#include <ehyb/ehyb.hpp>

#include <algorithm>
#include <string>
#include <tuple>
#include <vector>

namespace ehyb::testing {

/// Linear search for the smallest K whose warp-aligned cache window fits.
inline std::uint64_t brute_force_k(std::uint64_t dimension, std::uint64_t tau, std::uint64_t p, std::uint64_t warp,
                                   std::uint64_t shm) {
    for (std::uint64_t k = 1;; ++k) {
        std::uint64_t parts = k * p;
        std::uint64_t window = dimension / parts + (dimension % parts != 0 ? 1 : 0);
        if (window % warp != 0) window += warp - window % warp;
        if (window * tau <= shm && window <= 65536) return k;
    }
}

using Triple = std::tuple<index_t, index_t, double>;

inline std::vector<Triple> coo_triples(const CooMatrix& m) {
    std::vector<Triple> t;
    for (const auto& e : m.entries) t.emplace_back(e.row, e.col, e.value);
    std::sort(t.begin(), t.end());
    return t;
}

struct DecodedEhyb {
    std::vector<Triple> triples;
    /// Padding slots holding something other than (0, column 0).
    std::size_t dirty_padding = 0;
};

/// Walks every ELL and ER slot, mapping stored entries back to original
/// (row, col, value). Row lengths are recounted from the matrix and the
/// partition rather than taken from the format.
template <typename Scalar>
DecodedEhyb decode_ehyb(const EhybMatrix<Scalar>& e, const CooMatrix& m, const PartitionMap& p) {
    std::vector<index_t> inner(m.n_rows, 0), outer(m.n_rows, 0);
    for (const auto& entry : m.entries) {
        if (p.assignment[entry.row] == p.assignment[entry.col]) {
            ++inner[entry.row];
        } else {
            ++outer[entry.row];
        }
    }
    const index_t warp = e.params.profile.warp_size;
    DecodedEhyb out;
    for (index_t s = 0; s < e.width_ell.size(); ++s) {
        for (index_t lane = 0; lane < warp; ++lane) {
            const index_t new_row = s * warp + lane;
            const index_t old_row = e.plan.inverse_table[new_row];
            const index_t real = old_row < m.n_rows ? inner[old_row] : 0;
            for (index_t k = 0; k < e.width_ell[s]; ++k) {
                const auto idx = e.position_ell[s] + k * warp + lane;
                if (k < real) {
                    const index_t base = (new_row / e.params.vec_cache_size) * e.params.vec_cache_size;
                    const index_t old_col = e.plan.inverse_table[base + e.col_ell[idx]];
                    out.triples.emplace_back(old_row, old_col, static_cast<double>(e.val_ell[idx]));
                } else if (e.val_ell[idx] != Scalar{0} || e.col_ell[idx] != 0) {
                    ++out.dirty_padding;
                }
            }
        }
    }
    for (index_t s = 0; s < e.width_er.size(); ++s) {
        for (index_t lane = 0; lane < warp; ++lane) {
            const index_t slot = s * warp + lane;
            const bool live = slot < e.plan.y_idx_er.size();
            const index_t old_row = live ? e.plan.inverse_table[e.plan.y_idx_er[slot]] : 0;
            const index_t real = live ? outer[old_row] : 0;
            for (index_t k = 0; k < e.width_er[s]; ++k) {
                const auto idx = e.position_er[s] + k * warp + lane;
                if (k < real) {
                    out.triples.emplace_back(old_row, e.plan.inverse_table[e.col_er[idx]],
                                             static_cast<double>(e.val_er[idx]));
                } else if (e.val_er[idx] != Scalar{0} || e.col_er[idx] != 0) {
                    ++out.dirty_padding;
                }
            }
        }
    }
    std::sort(out.triples.begin(), out.triples.end());
    return out;
}

/// Triples with values rounded to the storage precision.
template <typename Scalar>
std::vector<Triple> rounded_triples(const CooMatrix& m) {
    auto t = coo_triples(m);
    for (auto& [r, c, v] : t) v = static_cast<double>(static_cast<Scalar>(v));
    std::sort(t.begin(), t.end());
    return t;
}

/// Checks the structural invariants of an assembled matrix; returns a
/// description of the first violation, or an empty string.
template <typename Scalar>
std::string check_structure(const EhybMatrix<Scalar>& e, const CooMatrix& m, const PartitionMap& p) {
    const auto& plan = e.plan;
    const index_t padded = e.padded_dimension;
    const index_t warp = e.params.profile.warp_size;
    const index_t vec = e.params.vec_cache_size;

    // Bijection.
    std::vector<char> seen(padded, 0);
    for (index_t i = 0; i < padded; ++i) {
        if (plan.reorder_table[i] >= padded || seen[plan.reorder_table[i]]++) return "reorder_table not a bijection";
        if (plan.inverse_table[plan.reorder_table[i]] != i) return "inverse_table does not invert reorder_table";
    }
    // Partition layout.
    if (padded != e.params.n_parts * vec) return "padded dimension";
    if (e.width_ell.size() != padded / warp) return "ELL slice count";
    for (index_t q = 0; q < e.params.n_parts; ++q) {
        if (e.part_boundary[q + 1] - e.part_boundary[q] != vec) return "partition window size";
    }
    for (index_t r = 0; r < m.n_rows; ++r) {
        if (plan.reorder_table[r] / vec != p.assignment[r]) return "row placed outside its partition";
    }
    // SELL-P arithmetic.
    for (std::size_t s = 0; s < e.width_ell.size(); ++s) {
        if (e.position_ell[s + 1] - e.position_ell[s] != warp * e.width_ell[s]) return "ELL position arithmetic";
    }
    for (std::size_t s = 0; s < e.width_er.size(); ++s) {
        if (e.position_er[s + 1] - e.position_er[s] != warp * e.width_er[s]) return "ER position arithmetic";
    }
    // Width monotonicity inside each partition, per row.
    std::vector<index_t> inner(padded, 0);
    for (const auto& entry : m.entries) {
        if (p.assignment[entry.row] == p.assignment[entry.col]) ++inner[plan.reorder_table[entry.row]];
    }
    for (index_t q = 0; q < e.params.n_parts; ++q) {
        for (index_t r = q * vec + 1; r < (q + 1) * vec; ++r) {
            if (inner[r] > inner[r - 1]) return "inner widths increase inside partition " + std::to_string(q);
        }
    }
    // ER mapping.
    for (index_t s = 0; s < plan.y_idx_er.size(); ++s) {
        const index_t old_row = plan.inverse_table[plan.y_idx_er[s]];
        if (plan.er_slot(old_row) != s) return "y_idx_er / arrange_table disagree";
    }
    // 16-bit bound.
    if (vec > 65536) return "cache window exceeds 16-bit range";
    for (auto c : e.col_ell) {
        if (c >= vec) return "col_ell beyond cache window";
    }
    // Conservation.
    auto decoded = decode_ehyb(e, m, p);
    if (decoded.dirty_padding != 0) return "padding slot holds data";
    if (decoded.triples != rounded_triples<Scalar>(m)) return "stored entries differ from input";
    if (e.nnz_ell + e.nnz_er != m.nnz()) return "nnz split";
    return {};
}

} // namespace ehyb::testing

#endif // EHYB_TESTS_ORACLES_HPP
