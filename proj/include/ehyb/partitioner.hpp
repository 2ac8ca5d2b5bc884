#ifndef EHYB_PARTITIONER_HPP
#define EHYB_PARTITIONER_HPP

#include "matrix_io.hpp"
#include "types.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ehyb {

/// Undirected graph of a square matrix: one vertex per row/column, one edge
/// per off-diagonal entry (symmetrized). Neighbor lists are sorted.
struct AdjacencyGraph {
    index_t n_vertices = 0;
    std::vector<index_t> offsets{0};
    std::vector<index_t> adjacency;

    std::span<const index_t> neighbors(index_t v) const {
        return {adjacency.data() + offsets[v], adjacency.data() + offsets[v + 1]};
    }
    index_t degree(index_t v) const { return offsets[v + 1] - offsets[v]; }
    std::size_t n_edges() const { return adjacency.size() / 2; }
};

/// Vertex to partition assignment (the partition vector).
struct PartitionMap {
    index_t n_parts = 0;
    std::vector<index_t> assignment;
    std::vector<index_t> part_sizes;

    index_t n_vertices() const { return static_cast<index_t>(assignment.size()); }

    static PartitionMap from_assignment(index_t n_parts, std::vector<index_t> assignment) {
        PartitionMap p;
        p.n_parts = n_parts;
        p.assignment = std::move(assignment);
        p.part_sizes.assign(n_parts, 0);
        for (std::size_t v = 0; v < p.assignment.size(); ++v) {
            if (p.assignment[v] >= n_parts) {
                throw ValidationError("vertex " + std::to_string(v) + " assigned to partition " +
                                      std::to_string(p.assignment[v]) + " >= " + std::to_string(n_parts));
            }
            ++p.part_sizes[p.assignment[v]];
        }
        return p;
    }

    index_t max_part_size() const {
        return part_sizes.empty() ? 0 : *std::max_element(part_sizes.begin(), part_sizes.end());
    }

    friend bool operator==(const PartitionMap&, const PartitionMap&) = default;
};

struct CutMetrics {
    std::size_t inner_entries = 0;
    std::size_t extra_entries = 0;
    /// inner / nnz; 1.0 for a matrix without entries.
    double inner_fraction = 1.0;
};

inline AdjacencyGraph build_graph(const CooMatrix& m) {
    if (!m.is_square()) throw DimensionMismatch("matrix must be square");
    std::vector<std::pair<index_t, index_t>> arcs;
    arcs.reserve(2 * m.nnz());
    for (const auto& e : m.entries) {
        if (e.row == e.col) continue;
        arcs.emplace_back(e.row, e.col);
        arcs.emplace_back(e.col, e.row);
    }
    std::sort(arcs.begin(), arcs.end());
    arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());

    AdjacencyGraph g;
    g.n_vertices = m.n_rows;
    g.offsets.assign(static_cast<std::size_t>(m.n_rows) + 1, 0);
    g.adjacency.reserve(arcs.size());
    for (const auto& [u, v] : arcs) {
        ++g.offsets[u + 1];
        g.adjacency.push_back(v);
    }
    for (std::size_t v = 0; v < m.n_rows; ++v) g.offsets[v + 1] += g.offsets[v];
    return g;
}

inline std::size_t edge_cut(const AdjacencyGraph& g, const PartitionMap& p) {
    std::size_t cut = 0;
    for (index_t u = 0; u < g.n_vertices; ++u) {
        for (auto v : g.neighbors(u)) {
            if (u < v && p.assignment[u] != p.assignment[v]) ++cut;
        }
    }
    return cut;
}

inline CutMetrics cut_metrics(const CooMatrix& m, const PartitionMap& p) {
    if (p.n_vertices() != m.n_rows || m.n_rows != m.n_cols) {
        throw DimensionMismatch("partition covers " + std::to_string(p.n_vertices()) + " vertices, matrix is " +
                                std::to_string(m.n_rows) + "x" + std::to_string(m.n_cols));
    }
    CutMetrics c;
    for (const auto& e : m.entries) {
        if (p.assignment[e.row] == p.assignment[e.col]) {
            ++c.inner_entries;
        } else {
            ++c.extra_entries;
        }
    }
    if (m.nnz() > 0) c.inner_fraction = static_cast<double>(c.inner_entries) / static_cast<double>(m.nnz());
    return c;
}

namespace detail {

constexpr index_t unassigned = std::numeric_limits<index_t>::max();

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline void check_feasible(std::size_t n_vertices, index_t n_parts, index_t capacity) {
    if (n_parts == 0) throw InfeasibleParams("number of partitions must be at least 1");
    if (static_cast<std::uint64_t>(n_parts) * capacity < n_vertices) {
        throw InfeasibleParams(std::to_string(n_parts) + " partitions of capacity " + std::to_string(capacity) +
                               " cannot hold " + std::to_string(n_vertices) + " vertices");
    }
}

/// Per-vertex neighbor counts by partition, reusing one scratch buffer.
class NeighborTally {
public:
    explicit NeighborTally(index_t n_parts) : count_(n_parts, 0) {}

    void tally(const AdjacencyGraph& g, const std::vector<index_t>& assignment, index_t v) {
        for (auto p : touched_) count_[p] = 0;
        touched_.clear();
        for (auto u : g.neighbors(v)) {
            auto p = assignment[u];
            if (count_[p]++ == 0) touched_.push_back(p);
        }
        std::sort(touched_.begin(), touched_.end());
    }

    const std::vector<index_t>& parts() const { return touched_; }
    index_t count(index_t p) const { return count_[p]; }

private:
    std::vector<index_t> count_;
    std::vector<index_t> touched_;
};

} // namespace detail

/// Moves vertices out of partitions larger than `capacity`. Boundary
/// vertices with the most neighbors outside their partition leave first and
/// go to the least-full adjacent partition with room; vertices without such
/// a neighbor go to the globally least-full partition.
inline void rebalance(const AdjacencyGraph& g, PartitionMap& p, index_t capacity) {
    detail::check_feasible(g.n_vertices, p.n_parts, capacity);
    detail::NeighborTally tally(p.n_parts);

    auto best_adjacent = [&](index_t v) -> std::optional<index_t> {
        tally.tally(g, p.assignment, v);
        std::optional<index_t> best;
        for (auto q : tally.parts()) {
            if (q == p.assignment[v] || p.part_sizes[q] >= capacity) continue;
            if (!best || p.part_sizes[q] < p.part_sizes[*best]) best = q;
        }
        return best;
    };
    auto least_full = [&] {
        return static_cast<index_t>(std::min_element(p.part_sizes.begin(), p.part_sizes.end()) -
                                    p.part_sizes.begin());
    };

    for (index_t part = 0; part < p.n_parts; ++part) {
        if (p.part_sizes[part] <= capacity) continue;

        struct Candidate {
            index_t vertex;
            bool has_target;
            index_t external;
        };
        std::vector<Candidate> candidates;
        for (index_t v = 0; v < g.n_vertices; ++v) {
            if (p.assignment[v] != part) continue;
            tally.tally(g, p.assignment, v);
            index_t external = g.degree(v) - tally.count(part);
            candidates.push_back({v, best_adjacent(v).has_value(), external});
        }
        std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
            if (a.has_target != b.has_target) return a.has_target;
            return a.external > b.external;
        });
        for (const auto& c : candidates) {
            if (p.part_sizes[part] <= capacity) break;
            index_t target = best_adjacent(c.vertex).value_or(least_full());
            --p.part_sizes[part];
            ++p.part_sizes[target];
            p.assignment[c.vertex] = target;
        }
    }
}

/// Greedy BFS region growing followed by one boundary-refinement pass.
/// Regions are filled one at a time up to `capacity`, each seeded from the
/// unassigned vertex of minimum degree (ties broken by `seed`). Isolated
/// vertices are dealt round-robin to partitions with room.
inline PartitionMap partition_graph(const AdjacencyGraph& g, index_t n_parts, index_t capacity,
                                    std::uint64_t seed = 0) {
    detail::check_feasible(g.n_vertices, n_parts, capacity);
    const index_t n = g.n_vertices;
    std::vector<index_t> assignment(n, detail::unassigned);
    std::vector<index_t> sizes(n_parts, 0);

    std::vector<index_t> seed_order;
    seed_order.reserve(n);
    for (index_t v = 0; v < n; ++v) {
        if (g.degree(v) > 0) seed_order.push_back(v);
    }
    auto tiebreak = [seed](index_t v) { return seed == 0 ? std::uint64_t{v} : detail::splitmix64(v ^ seed); };
    std::sort(seed_order.begin(), seed_order.end(), [&](index_t a, index_t b) {
        if (g.degree(a) != g.degree(b)) return g.degree(a) < g.degree(b);
        return tiebreak(a) < tiebreak(b);
    });

    std::size_t seed_cursor = 0;
    std::size_t remaining = seed_order.size();
    std::deque<index_t> frontier;
    for (index_t part = 0; part < n_parts && remaining > 0; ++part) {
        frontier.clear();
        while (sizes[part] < capacity && remaining > 0) {
            if (frontier.empty()) {
                while (assignment[seed_order[seed_cursor]] != detail::unassigned) ++seed_cursor;
                frontier.push_back(seed_order[seed_cursor]);
            }
            index_t v = frontier.front();
            frontier.pop_front();
            if (assignment[v] != detail::unassigned) continue;
            assignment[v] = part;
            ++sizes[part];
            --remaining;
            for (auto u : g.neighbors(v)) {
                if (assignment[u] == detail::unassigned) frontier.push_back(u);
            }
        }
    }

    index_t cursor = 0;
    for (index_t v = 0; v < n; ++v) {
        if (g.degree(v) > 0) continue;
        while (sizes[cursor] >= capacity) cursor = (cursor + 1) % n_parts;
        assignment[v] = cursor;
        ++sizes[cursor];
        cursor = (cursor + 1) % n_parts;
    }

    // Refinement: move a boundary vertex when the move strictly reduces the cut.
    detail::NeighborTally tally(n_parts);
    for (index_t v = 0; v < n; ++v) {
        const index_t own = assignment[v];
        tally.tally(g, assignment, v);
        std::optional<index_t> best;
        index_t best_gain = 0;
        for (auto q : tally.parts()) {
            if (q == own || sizes[q] >= capacity || tally.count(q) <= tally.count(own)) continue;
            index_t gain = tally.count(q) - tally.count(own);
            if (gain > best_gain) {
                best = q;
                best_gain = gain;
            }
        }
        if (best) {
            --sizes[own];
            ++sizes[*best];
            assignment[v] = *best;
        }
    }

    return PartitionMap::from_assignment(n_parts, std::move(assignment));
}

/// Balanced random partition: a seeded shuffle dealt round-robin. Used as
/// a quality baseline.
inline PartitionMap random_partition(index_t n_vertices, index_t n_parts, index_t capacity, std::uint64_t seed) {
    detail::check_feasible(n_vertices, n_parts, capacity);
    std::vector<index_t> order(n_vertices);
    for (index_t v = 0; v < n_vertices; ++v) order[v] = v;
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng() % i]);
    }
    std::vector<index_t> assignment(n_vertices);
    for (std::size_t i = 0; i < order.size(); ++i) assignment[order[i]] = static_cast<index_t>(i % n_parts);
    return PartitionMap::from_assignment(n_parts, std::move(assignment));
}

/// Consecutive vertex ranges of `capacity` vertices each.
inline PartitionMap contiguous_partition(index_t n_vertices, index_t n_parts, index_t capacity) {
    detail::check_feasible(n_vertices, n_parts, capacity);
    std::vector<index_t> assignment(n_vertices);
    for (index_t v = 0; v < n_vertices; ++v) assignment[v] = v / capacity;
    return PartitionMap::from_assignment(n_parts, std::move(assignment));
}

/// Reads a METIS-style partition file: one 0-based partition id per line.
/// When `n_parts` is not given it is taken as max id + 1.
inline PartitionMap load_partition_file(std::istream& in, index_t n_vertices,
                                        std::optional<index_t> n_parts = std::nullopt) {
    std::vector<index_t> assignment;
    assignment.reserve(n_vertices);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto tokens = detail::split_ws(line);
        if (tokens.empty()) continue;
        if (tokens.size() != 1) throw ParseError(line_no, "expected a single partition id");
        auto id = detail::parse_count(tokens[0], line_no, "partition id");
        if (id >= std::numeric_limits<index_t>::max()) throw ParseError(line_no, "partition id out of range");
        assignment.push_back(static_cast<index_t>(id));
    }
    if (assignment.size() != n_vertices) {
        throw ValidationError("partition file has " + std::to_string(assignment.size()) + " entries, expected " +
                              std::to_string(n_vertices));
    }
    index_t parts = n_parts.value_or(
        assignment.empty() ? 1 : *std::max_element(assignment.begin(), assignment.end()) + 1);
    return PartitionMap::from_assignment(parts, std::move(assignment));
}

inline void save_partition_file(const PartitionMap& p, std::ostream& out) {
    for (auto id : p.assignment) out << id << '\n';
}

} // namespace ehyb

#endif // EHYB_PARTITIONER_HPP
