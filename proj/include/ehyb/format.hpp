#ifndef EHYB_FORMAT_HPP
#define EHYB_FORMAT_HPP

#include "matrix_io.hpp"
#include "partitioner.hpp"
#include "types.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace ehyb {

/// Largest per-partition cache window addressable with 16-bit local indices.
inline constexpr std::uint64_t max_vec_cache_size = 1u << 16;

/// Simulated device: processor count, warp width and per-block shared
/// memory in bytes.
struct DeviceProfile {
    index_t num_processors = 80;
    index_t warp_size = 32;
    std::uint64_t shm_max = 48 * 1024;

    void validate() const {
        if (num_processors < 1) throw ValidationError("device needs at least one processor");
        if (warp_size < 1) throw ValidationError("warp size must be at least 1");
        if (shm_max == 0) throw ValidationError("shared memory capacity must be positive");
    }

    friend bool operator==(const DeviceProfile&, const DeviceProfile&) = default;
};

struct EhybParams {
    DeviceProfile profile;
    index_t k = 1;
    index_t n_parts = 1;
    /// Input-vector values cached per partition, a multiple of the warp size.
    index_t vec_cache_size = 0;
    /// Bytes per stored value, 4 or 8.
    index_t tau = 8;

    index_t warp_size() const { return profile.warp_size; }
    index_t slices_per_part() const { return vec_cache_size / profile.warp_size; }
    std::uint64_t padded_dimension() const { return std::uint64_t{n_parts} * vec_cache_size; }

    friend bool operator==(const EhybParams&, const EhybParams&) = default;
};

namespace detail {

inline std::uint64_t cache_window(std::uint64_t dimension, std::uint64_t parts, index_t warp) {
    return align_up(ceil_div(dimension, parts), warp);
}

} // namespace detail

/// Smallest K such that a warp-aligned window of ceil(dimension / (K*P))
/// values fits in shared memory and stays addressable with 16 bits.
inline EhybParams compute_params(std::uint64_t dimension, index_t tau, const DeviceProfile& profile) {
    profile.validate();
    if (dimension < 1) throw ValidationError("dimension must be at least 1");
    if (tau != 4 && tau != 8) throw ValidationError("value size must be 4 or 8 bytes");
    if (std::uint64_t{profile.warp_size} * tau > profile.shm_max || profile.warp_size > max_vec_cache_size) {
        throw InfeasibleParams("a single warp-width window of " + std::to_string(profile.warp_size) +
                               " values does not fit in " + std::to_string(profile.shm_max) + " bytes");
    }
    const std::uint64_t p = profile.num_processors;
    auto fits = [&](std::uint64_t k) {
        auto window = detail::cache_window(dimension, k * p, profile.warp_size);
        return window * tau <= profile.shm_max && window <= max_vec_cache_size;
    };
    // Every window is at least dimension / (K*P) values, so no smaller K can fit.
    std::uint64_t k = std::max<std::uint64_t>(1, (dimension * tau) / (p * profile.shm_max));
    while (!fits(k)) ++k;

    const auto n_parts = k * p;
    if (n_parts > std::numeric_limits<index_t>::max()) throw InfeasibleParams("partition count overflows");
    EhybParams params;
    params.profile = profile;
    params.k = static_cast<index_t>(k);
    params.n_parts = static_cast<index_t>(n_parts);
    params.vec_cache_size = static_cast<index_t>(detail::cache_window(dimension, n_parts, profile.warp_size));
    params.tau = tau;
    return params;
}

/// Per-row counts of entries whose column shares the row's partition
/// (inner) or not (outer), plus the two sort orders that drive reordering.
struct RowClassification {
    std::vector<index_t> inner_count;
    std::vector<index_t> outer_count;
    /// All rows grouped by partition id; inner_count descending within a group.
    std::vector<index_t> s_array1;
    /// Rows with outer entries, outer_count descending.
    std::vector<index_t> s_array2;
};

inline RowClassification classify_rows(const CooMatrix& m, const PartitionMap& p) {
    if (p.n_vertices() != m.n_rows || !m.is_square()) {
        throw DimensionMismatch("partition covers " + std::to_string(p.n_vertices()) + " vertices, matrix is " +
                                std::to_string(m.n_rows) + "x" + std::to_string(m.n_cols));
    }
    RowClassification cls;
    cls.inner_count.assign(m.n_rows, 0);
    cls.outer_count.assign(m.n_rows, 0);
    for (const auto& e : m.entries) {
        if (p.assignment[e.row] == p.assignment[e.col]) {
            ++cls.inner_count[e.row];
        } else {
            ++cls.outer_count[e.row];
        }
    }

    cls.s_array1.resize(m.n_rows);
    std::iota(cls.s_array1.begin(), cls.s_array1.end(), index_t{0});
    std::stable_sort(cls.s_array1.begin(), cls.s_array1.end(), [&](index_t a, index_t b) {
        if (p.assignment[a] != p.assignment[b]) return p.assignment[a] < p.assignment[b];
        return cls.inner_count[a] > cls.inner_count[b];
    });

    for (index_t r = 0; r < m.n_rows; ++r) {
        if (cls.outer_count[r] > 0) cls.s_array2.push_back(r);
    }
    std::stable_sort(cls.s_array2.begin(), cls.s_array2.end(),
                     [&](index_t a, index_t b) { return cls.outer_count[a] > cls.outer_count[b]; });
    return cls;
}

/// Symmetric row/column permutation plus the extra-rows arrangement.
/// Rows `dimension .. padded_dimension` are virtual padding rows.
struct ReorderPlan {
    index_t dimension = 0;
    /// old row -> new row, over the padded range.
    std::vector<index_t> reorder_table;
    /// new row -> old row.
    std::vector<index_t> inverse_table;
    /// (old row, extra-row slot) pairs sorted by old row.
    std::vector<std::pair<index_t, index_t>> arrange_table;
    /// extra-row slot -> new row.
    std::vector<index_t> y_idx_er;

    index_t padded_dimension() const { return static_cast<index_t>(reorder_table.size()); }
    index_t n_er_rows() const { return static_cast<index_t>(y_idx_er.size()); }

    std::optional<index_t> er_slot(index_t old_row) const {
        auto it = std::lower_bound(arrange_table.begin(), arrange_table.end(), std::pair<index_t, index_t>{old_row, 0});
        if (it == arrange_table.end() || it->first != old_row) return std::nullopt;
        return it->second;
    }

    friend bool operator==(const ReorderPlan&, const ReorderPlan&) = default;
};

inline ReorderPlan build_reorder_plan(const RowClassification& cls, const EhybParams& params, const PartitionMap& p) {
    const auto dimension = static_cast<index_t>(cls.inner_count.size());
    if (p.n_vertices() != dimension) throw DimensionMismatch("partition does not match classification");
    if (p.n_parts != params.n_parts) {
        throw ValidationError("partition has " + std::to_string(p.n_parts) + " parts, parameters require " +
                              std::to_string(params.n_parts));
    }
    if (p.max_part_size() > params.vec_cache_size) {
        throw ValidationError("partition of " + std::to_string(p.max_part_size()) +
                              " rows exceeds the vector cache size " + std::to_string(params.vec_cache_size));
    }
    if (params.vec_cache_size % params.warp_size() != 0) {
        throw ValidationError("vector cache size must be a multiple of the warp size");
    }

    const auto padded = params.padded_dimension();
    if (padded >= std::numeric_limits<index_t>::max()) throw ValidationError("padded dimension overflows");

    ReorderPlan plan;
    plan.dimension = dimension;
    plan.reorder_table.resize(padded);
    plan.inverse_table.resize(padded);

    index_t next_padding = dimension;
    std::size_t cursor = 0;
    for (index_t part = 0; part < params.n_parts; ++part) {
        index_t new_row = part * params.vec_cache_size;
        const index_t end = new_row + params.vec_cache_size;
        for (index_t i = 0; i < p.part_sizes[part]; ++i, ++cursor, ++new_row) {
            const index_t old_row = cls.s_array1[cursor];
            plan.reorder_table[old_row] = new_row;
            plan.inverse_table[new_row] = old_row;
        }
        for (; new_row < end; ++new_row, ++next_padding) {
            plan.reorder_table[next_padding] = new_row;
            plan.inverse_table[new_row] = next_padding;
        }
    }

    plan.y_idx_er.reserve(cls.s_array2.size());
    plan.arrange_table.reserve(cls.s_array2.size());
    for (std::size_t slot = 0; slot < cls.s_array2.size(); ++slot) {
        const index_t old_row = cls.s_array2[slot];
        plan.arrange_table.emplace_back(old_row, static_cast<index_t>(slot));
        plan.y_idx_er.push_back(plan.reorder_table[old_row]);
    }
    std::sort(plan.arrange_table.begin(), plan.arrange_table.end());
    return plan;
}

/// EHYB matrix: sliced ELL part with partition-local 16-bit columns served
/// from the cached vector window, and an extra-rows (ER) part with global
/// 32-bit columns read from the uncached input vector.
template <typename Scalar>
struct EhybMatrix {
    static_assert(std::is_same_v<Scalar, float> || std::is_same_v<Scalar, double>);
    using value_type = Scalar;

    EhybParams params;
    ReorderPlan plan;
    index_t dimension = 0;
    index_t padded_dimension = 0;

    std::vector<Scalar> val_ell;
    std::vector<std::uint16_t> col_ell;
    std::vector<index_t> position_ell;
    std::vector<index_t> width_ell;
    std::vector<index_t> part_boundary;

    std::vector<Scalar> val_er;
    std::vector<index_t> col_er;
    std::vector<index_t> position_er;
    std::vector<index_t> width_er;

    /// Structural entries (excluding padding) in each part.
    std::uint64_t nnz_ell = 0;
    std::uint64_t nnz_er = 0;

    index_t warp_size() const { return params.warp_size(); }
    index_t n_slices_ell() const { return static_cast<index_t>(width_ell.size()); }
    index_t n_slices_er() const { return static_cast<index_t>(width_er.size()); }
    index_t n_er_rows() const { return plan.n_er_rows(); }
    std::span<const index_t> y_idx_er() const { return plan.y_idx_er; }
    std::uint64_t nnz() const { return nnz_ell + nnz_er; }
    index_t partition_of_new_row(index_t new_row) const { return new_row / params.vec_cache_size; }

    friend bool operator==(const EhybMatrix&, const EhybMatrix&) = default;
};

namespace detail {

inline std::vector<index_t> sliced_positions(std::span<const index_t> widths, index_t warp) {
    std::vector<index_t> pos(widths.size() + 1, 0);
    std::uint64_t acc = 0;
    for (std::size_t s = 0; s < widths.size(); ++s) {
        acc += std::uint64_t{widths[s]} * warp;
        if (acc >= std::numeric_limits<index_t>::max()) throw ValidationError("slot count overflows 32-bit offsets");
        pos[s + 1] = static_cast<index_t>(acc);
    }
    return pos;
}

} // namespace detail

/// Places every entry into the ELL or ER part following `plan`. Entries of
/// a row keep ascending original-column order. Padding slots hold 0 with
/// column 0.
template <typename Scalar>
EhybMatrix<Scalar> assemble_ehyb(const CooMatrix& m, const ReorderPlan& plan, const EhybParams& params,
                                 const PartitionMap& p) {
    if (params.tau != sizeof(Scalar)) {
        throw ValidationError("value size " + std::to_string(params.tau) + " does not match the storage type");
    }
    if (!m.is_square() || m.n_rows != plan.dimension || p.n_vertices() != m.n_rows) {
        throw DimensionMismatch("matrix, plan and partition dimensions disagree");
    }
    const index_t warp = params.warp_size();
    const index_t vec = params.vec_cache_size;
    const auto csr = coo_to_csr(m);

    EhybMatrix<Scalar> e;
    e.params = params;
    e.plan = plan;
    e.dimension = m.n_rows;
    e.padded_dimension = plan.padded_dimension();

    e.part_boundary.resize(static_cast<std::size_t>(params.n_parts) + 1);
    for (index_t q = 0; q <= params.n_parts; ++q) e.part_boundary[q] = q * vec;

    std::vector<index_t> inner(m.n_rows, 0), outer(m.n_rows, 0);
    for (const auto& entry : m.entries) {
        (p.assignment[entry.row] == p.assignment[entry.col] ? inner : outer)[entry.row]++;
    }

    e.width_ell.assign(e.padded_dimension / warp, 0);
    for (index_t r = 0; r < m.n_rows; ++r) {
        auto& w = e.width_ell[plan.reorder_table[r] / warp];
        w = std::max(w, inner[r]);
    }
    e.position_ell = detail::sliced_positions(e.width_ell, warp);

    const index_t n_er = plan.n_er_rows();
    e.width_er.assign(ceil_div(n_er, warp), 0);
    for (const auto& [old_row, slot] : plan.arrange_table) {
        auto& w = e.width_er[slot / warp];
        w = std::max(w, outer[old_row]);
    }
    e.position_er = detail::sliced_positions(e.width_er, warp);

    e.val_ell.assign(e.position_ell.back(), Scalar{0});
    e.col_ell.assign(e.position_ell.back(), 0);
    e.val_er.assign(e.position_er.back(), Scalar{0});
    e.col_er.assign(e.position_er.back(), 0);

    for (index_t r = 0; r < m.n_rows; ++r) {
        const index_t new_row = plan.reorder_table[r];
        const index_t slice = new_row / warp;
        const index_t lane = new_row % warp;
        const index_t part = p.assignment[r];
        const index_t base = e.part_boundary[part];
        std::optional<index_t> er_slot;
        if (outer[r] > 0) {
            er_slot = plan.er_slot(r);
            if (!er_slot) throw ValidationError("row " + std::to_string(r) + " has extra entries but no ER slot");
        }
        std::uint64_t k_ell = 0, k_er = 0;
        for (auto k = csr.row_ptr[r]; k < csr.row_ptr[r + 1]; ++k) {
            const index_t col = csr.col_idx[k];
            if (p.assignment[col] == part) {
                const auto local = plan.reorder_table[col] - base;
                if (local >= vec || local >= max_vec_cache_size) {
                    throw ValidationError("local column offset " + std::to_string(local) + " out of cache window");
                }
                const auto idx = e.position_ell[slice] + lane + k_ell * warp;
                e.col_ell[idx] = static_cast<std::uint16_t>(local);
                e.val_ell[idx] = static_cast<Scalar>(csr.values[k]);
                ++k_ell;
            } else {
                const index_t es = *er_slot / warp;
                const auto idx = e.position_er[es] + *er_slot % warp + k_er * warp;
                e.col_er[idx] = plan.reorder_table[col];
                e.val_er[idx] = static_cast<Scalar>(csr.values[k]);
                ++k_er;
            }
        }
        e.nnz_ell += k_ell;
        e.nnz_er += k_er;
    }
    return e;
}

/// Byte counts of the stored structure. `slot_savings` is the per-slot
/// reduction from 16-bit instead of 32-bit ELL columns, 1 - (tau+2)/(tau+4).
/// `structure_savings` is the same reduction measured over the whole ELL
/// part including its metadata arrays.
struct FootprintStats {
    std::uint64_t ell_slots = 0;
    std::uint64_t er_slots = 0;
    std::uint64_t ell_padding_slots = 0;
    std::uint64_t ell_slot_bytes = 0;
    std::uint64_t ell_bytes = 0;
    std::uint64_t er_bytes = 0;
    std::uint64_t total_bytes = 0;
    double slot_savings = 0.0;
    double structure_savings = 0.0;
};

inline double per_slot_savings(index_t tau) {
    return 1.0 - static_cast<double>(tau + 2) / static_cast<double>(tau + 4);
}

template <typename Scalar>
FootprintStats footprint_stats(const EhybMatrix<Scalar>& e) {
    constexpr std::uint64_t meta = sizeof(index_t);
    const std::uint64_t tau = e.params.tau;
    FootprintStats f;
    f.ell_slots = e.val_ell.size();
    f.er_slots = e.val_er.size();
    f.ell_padding_slots = f.ell_slots - e.nnz_ell;
    f.ell_slot_bytes = f.ell_slots * (tau + sizeof(std::uint16_t));
    const std::uint64_t ell_meta = (e.position_ell.size() + e.width_ell.size() + e.part_boundary.size()) * meta;
    f.ell_bytes = f.ell_slot_bytes + ell_meta;
    f.er_bytes = f.er_slots * (tau + sizeof(index_t)) +
                 (e.position_er.size() + e.width_er.size() + e.plan.y_idx_er.size()) * meta;
    f.total_bytes = f.ell_bytes + f.er_bytes;
    f.slot_savings = per_slot_savings(e.params.tau);
    const std::uint64_t ell_bytes_wide = f.ell_slots * (tau + sizeof(index_t)) + ell_meta;
    f.structure_savings =
        ell_bytes_wide == 0 ? 0.0 : 1.0 - static_cast<double>(f.ell_bytes) / static_cast<double>(ell_bytes_wide);
    return f;
}

/// x_new[reorder_table[i]] = x[i]; padding positions are zero.
template <typename T>
std::vector<T> permute_vector(std::span<const T> x, const ReorderPlan& plan) {
    if (x.size() != plan.dimension) {
        throw DimensionMismatch("vector of length " + std::to_string(x.size()) + ", expected " +
                                std::to_string(plan.dimension));
    }
    std::vector<T> out(plan.padded_dimension(), T{0});
    for (std::size_t i = 0; i < x.size(); ++i) out[plan.reorder_table[i]] = x[i];
    return out;
}

template <typename T>
std::vector<T> unpermute_vector(std::span<const T> y, const ReorderPlan& plan) {
    if (y.size() != plan.padded_dimension()) {
        throw DimensionMismatch("vector of length " + std::to_string(y.size()) + ", expected " +
                                std::to_string(plan.padded_dimension()));
    }
    std::vector<T> out(plan.dimension);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = y[plan.reorder_table[i]];
    return out;
}

} // namespace ehyb

#endif // EHYB_FORMAT_HPP
