#ifndef EHYB_EXEC_ENGINE_HPP
#define EHYB_EXEC_ENGINE_HPP

#include "format.hpp"
#include "matrix_io.hpp"
#include "types.hpp"

#include <atomic>
#include <barrier>
#include <cstdint>
#include <functional>
#include <span>
#include <thread>
#include <vector>

namespace ehyb {

/// y = A x over CSR, each row accumulated in ascending column order.
inline std::vector<double> spmv_csr(const CsrMatrix& m, std::span<const double> x) {
    if (x.size() != m.n_cols) {
        throw DimensionMismatch("input vector of length " + std::to_string(x.size()) + ", expected " +
                                std::to_string(m.n_cols));
    }
    std::vector<double> y(m.n_rows, 0.0);
    for (index_t r = 0; r < m.n_rows; ++r) {
        double sum = 0.0;
        for (auto k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) sum += m.values[k] * x[m.col_idx[k]];
        y[r] = sum;
    }
    return y;
}

enum class Scheduling { static_, stealing };

enum class ExecPhase { ell, er };

/// Simulated device execution. Each worker plays the role of a resident
/// block: it loads a partition's window of x into its cache and processes
/// that partition's slices, one warp-wide lane loop at a time.
struct ExecutionConfig {
    unsigned worker_count = 1;
    Scheduling scheduling = Scheduling::static_;
    bool record_stats = true;
    /// Called after each slice completes, from the worker that ran it.
    /// Must be thread-safe when worker_count > 1.
    std::function<void(ExecPhase, index_t slice)> on_slice_done;
};

struct ExecStats {
    /// Structural entries whose x value came from a partition cache.
    std::uint64_t cached_loads = 0;
    /// Structural entries whose x value came from the uncached vector.
    std::uint64_t uncached_loads = 0;
    std::uint64_t flops = 0;
    std::uint64_t bytes_touched_model = 0;
    /// Slots read including padding, as counted by the lanes.
    std::uint64_t ell_slot_reads = 0;
    std::uint64_t er_slot_reads = 0;
    /// Cache window loads (one per block visit, helpers included).
    std::uint64_t cache_fills = 0;
    std::vector<std::uint64_t> ell_slices_per_worker;
    std::vector<std::uint64_t> er_slices_per_worker;
};

template <typename Scalar>
struct SpmvResult {
    std::vector<Scalar> y;
    ExecStats stats;
};

/// Modeled bytes moved by one product:
///   ell_slots*(tau+2) + er_slots*(tau+4) + metadata
///   + dimension*tau (cache fills) + uncached_loads*tau + dimension*tau (y)
template <typename Scalar>
std::uint64_t traffic_model(const EhybMatrix<Scalar>& e, index_t tau) {
    constexpr std::uint64_t meta = sizeof(index_t);
    const std::uint64_t metadata = (e.position_ell.size() + e.width_ell.size() + e.part_boundary.size() +
                                    e.position_er.size() + e.width_er.size() + e.plan.y_idx_er.size()) *
                                   meta;
    return e.val_ell.size() * (tau + 2) + e.val_er.size() * (tau + 4) + metadata + std::uint64_t{e.dimension} * tau +
           e.nnz_er * tau + std::uint64_t{e.dimension} * tau;
}

template <typename Scalar>
std::uint64_t traffic_model(const EhybMatrix<Scalar>& e) {
    return traffic_model(e, e.params.tau);
}

namespace detail {

struct WorkerCounters {
    std::uint64_t ell_slot_reads = 0;
    std::uint64_t er_slot_reads = 0;
    std::uint64_t cache_fills = 0;
    std::uint64_t ell_slices = 0;
    std::uint64_t er_slices = 0;
};

template <typename Scalar>
class EhybKernel {
public:
    EhybKernel(const EhybMatrix<Scalar>& e, std::span<const Scalar> x, std::span<Scalar> y,
               const ExecutionConfig& cfg)
        : e_(e), x_(x), y_(y), cfg_(cfg), workers_(cfg.worker_count), counters_(cfg.worker_count),
          slice_claims_(e.params.n_parts), phase_sync_(static_cast<std::ptrdiff_t>(cfg.worker_count)) {}

    void run() {
        if (workers_ == 1) {
            work(0);
            return;
        }
        std::vector<std::jthread> threads;
        threads.reserve(workers_);
        for (unsigned w = 0; w < workers_; ++w) threads.emplace_back([this, w] { work(w); });
    }

    const std::vector<WorkerCounters>& counters() const { return counters_; }

private:
    void work(unsigned w) {
        std::vector<Scalar> cache(e_.params.vec_cache_size);
        auto& c = counters_[w];
        if (cfg_.scheduling == Scheduling::static_) {
            for (index_t b = w; b < e_.params.n_parts; b += workers_) {
                fill_cache(b, cache, c);
                const index_t first = b * e_.params.slices_per_part();
                for (index_t s = first; s < first + e_.params.slices_per_part(); ++s) ell_slice(s, cache, c);
            }
        } else {
            // Claim whole blocks first, then help unfinished blocks by
            // stealing their remaining slices.
            for (index_t b = next_block_++; b < e_.params.n_parts; b = next_block_++) drain_block(b, cache, c);
            for (index_t b = 0; b < e_.params.n_parts; ++b) {
                if (slice_claims_[b].load(std::memory_order_relaxed) < e_.params.slices_per_part()) {
                    drain_block(b, cache, c);
                }
            }
        }

        if (workers_ > 1) phase_sync_.arrive_and_wait();

        const index_t n_er = e_.n_slices_er();
        if (cfg_.scheduling == Scheduling::static_) {
            for (index_t s = w; s < n_er; s += workers_) er_slice(s, c);
        } else {
            for (index_t s = next_er_slice_++; s < n_er; s = next_er_slice_++) er_slice(s, c);
        }
    }

    void fill_cache(index_t block, std::vector<Scalar>& cache, WorkerCounters& c) {
        const auto begin = x_.begin() + e_.part_boundary[block];
        std::copy(begin, begin + e_.params.vec_cache_size, cache.begin());
        ++c.cache_fills;
    }

    void drain_block(index_t block, std::vector<Scalar>& cache, WorkerCounters& c) {
        const index_t per_block = e_.params.slices_per_part();
        bool filled = false;
        for (index_t i = slice_claims_[block]++; i < per_block; i = slice_claims_[block]++) {
            if (!filled) {
                fill_cache(block, cache, c);
                filled = true;
            }
            ell_slice(block * per_block + i, cache, c);
        }
    }

    void ell_slice(index_t slice, const std::vector<Scalar>& cache, WorkerCounters& c) {
        const index_t warp = e_.warp_size();
        const index_t position = e_.position_ell[slice];
        const index_t width = e_.width_ell[slice];
        for (index_t lane = 0; lane < warp; ++lane) {
            Scalar sum{0};
            for (index_t k = 0; k < width; ++k) {
                const index_t idx = position + k * warp + lane;
                sum += e_.val_ell[idx] * cache[e_.col_ell[idx]];
            }
            y_[slice * warp + lane] = sum;
        }
        c.ell_slot_reads += std::uint64_t{width} * warp;
        ++c.ell_slices;
        if (cfg_.on_slice_done) cfg_.on_slice_done(ExecPhase::ell, slice);
    }

    void er_slice(index_t slice, WorkerCounters& c) {
        const index_t warp = e_.warp_size();
        const index_t position = e_.position_er[slice];
        const index_t width = e_.width_er[slice];
        const auto rows = e_.y_idx_er();
        for (index_t lane = 0; lane < warp; ++lane) {
            const index_t slot = slice * warp + lane;
            if (slot >= rows.size()) break;
            Scalar sum{0};
            for (index_t k = 0; k < width; ++k) {
                const index_t idx = position + k * warp + lane;
                sum += e_.val_er[idx] * x_[e_.col_er[idx]];
            }
            y_[rows[slot]] += sum;
        }
        c.er_slot_reads += std::uint64_t{width} * warp;
        ++c.er_slices;
        if (cfg_.on_slice_done) cfg_.on_slice_done(ExecPhase::er, slice);
    }

    const EhybMatrix<Scalar>& e_;
    std::span<const Scalar> x_;
    std::span<Scalar> y_;
    const ExecutionConfig& cfg_;
    unsigned workers_;
    std::vector<WorkerCounters> counters_;
    std::atomic<index_t> next_block_{0};
    std::atomic<index_t> next_er_slice_{0};
    std::vector<std::atomic<index_t>> slice_claims_;
    std::barrier<> phase_sync_;
};

} // namespace detail

/// SpMV in reordered space. Phase one writes every row from the ELL part
/// using per-partition cached windows; after a barrier, phase two adds the
/// ER row sums. Each row gets one write and at most one add, in storage
/// order, so the result does not depend on worker count or scheduling.
template <typename Scalar>
SpmvResult<Scalar> spmv_ehyb(const EhybMatrix<Scalar>& e, std::span<const Scalar> x_reordered,
                             const ExecutionConfig& cfg = {}) {
    if (cfg.worker_count < 1) throw ValidationError("worker_count must be at least 1");
    if (e.part_boundary.size() != std::size_t{e.params.n_parts} + 1 || e.position_ell.empty()) {
        throw ValidationError("matrix is not assembled");
    }
    if (x_reordered.size() != e.padded_dimension) {
        throw DimensionMismatch("reordered vector of length " + std::to_string(x_reordered.size()) + ", expected " +
                                std::to_string(e.padded_dimension));
    }
    SpmvResult<Scalar> result;
    result.y.assign(e.padded_dimension, Scalar{0});
    detail::EhybKernel<Scalar> kernel(e, x_reordered, result.y, cfg);
    kernel.run();

    if (cfg.record_stats) {
        auto& s = result.stats;
        s.cached_loads = e.nnz_ell;
        s.uncached_loads = e.nnz_er;
        s.flops = 2 * e.nnz();
        s.bytes_touched_model = traffic_model(e);
        for (const auto& c : kernel.counters()) {
            s.ell_slot_reads += c.ell_slot_reads;
            s.er_slot_reads += c.er_slot_reads;
            s.cache_fills += c.cache_fills;
            s.ell_slices_per_worker.push_back(c.ell_slices);
            s.er_slices_per_worker.push_back(c.er_slices);
        }
    }
    return result;
}

/// SpMV in the original row order: permute, multiply, unpermute.
template <typename Scalar>
std::vector<Scalar> spmv_ehyb_user(const EhybMatrix<Scalar>& e, std::span<const Scalar> x,
                                   const ExecutionConfig& cfg = {}) {
    auto x_reordered = permute_vector(x, e.plan);
    ExecutionConfig quiet = cfg;
    quiet.record_stats = false;
    auto result = spmv_ehyb<Scalar>(e, x_reordered, quiet);
    return unpermute_vector<Scalar>(result.y, e.plan);
}

} // namespace ehyb

#endif // EHYB_EXEC_ENGINE_HPP
