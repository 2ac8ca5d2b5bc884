#ifndef EHYB_PIPELINE_HPP
#define EHYB_PIPELINE_HPP

#include "format.hpp"
#include "matrix_io.hpp"
#include "partitioner.hpp"
#include "types.hpp"

#include <chrono>
#include <optional>

namespace ehyb {

struct PipelineOptions {
    DeviceProfile profile;
    std::uint64_t seed = 0;
    /// Externally computed partition; rebalanced to the cache capacity.
    std::optional<PartitionMap> partition;
};

template <typename Scalar>
struct PipelineResult {
    EhybMatrix<Scalar> matrix;
    PartitionMap partition;
    CutMetrics cut;
    double partition_seconds = 0.0;
    double assemble_seconds = 0.0;
};

/// Partition, classify, reorder and assemble a square matrix.
template <typename Scalar>
PipelineResult<Scalar> build_ehyb(const CooMatrix& m, const PipelineOptions& options = {}) {
    using clock = std::chrono::steady_clock;
    if (!m.is_square()) throw DimensionMismatch("matrix must be square");
    if (m.n_rows == 0) throw ValidationError("matrix is empty");

    const auto params = compute_params(m.n_rows, sizeof(Scalar), options.profile);

    auto t0 = clock::now();
    const auto graph = build_graph(m);
    PartitionMap partition;
    if (options.partition) {
        if (options.partition->n_vertices() != m.n_rows) {
            throw DimensionMismatch("partition covers " + std::to_string(options.partition->n_vertices()) +
                                    " vertices, matrix has " + std::to_string(m.n_rows) + " rows");
        }
        if (options.partition->n_parts > params.n_parts) {
            throw ValidationError("partition uses " + std::to_string(options.partition->n_parts) +
                                  " parts, the device allows " + std::to_string(params.n_parts));
        }
        partition = PartitionMap::from_assignment(params.n_parts, options.partition->assignment);
        rebalance(graph, partition, params.vec_cache_size);
    } else {
        partition = partition_graph(graph, params.n_parts, params.vec_cache_size, options.seed);
    }
    auto t1 = clock::now();

    const auto cls = classify_rows(m, partition);
    const auto plan = build_reorder_plan(cls, params, partition);
    auto matrix = assemble_ehyb<Scalar>(m, plan, params, partition);
    auto t2 = clock::now();

    PipelineResult<Scalar> result{std::move(matrix), partition, cut_metrics(m, partition), 0.0, 0.0};
    result.partition_seconds = std::chrono::duration<double>(t1 - t0).count();
    result.assemble_seconds = std::chrono::duration<double>(t2 - t1).count();
    return result;
}

} // namespace ehyb

#endif // EHYB_PIPELINE_HPP
