#include <ehyb/partitioner.hpp>

#include <gtest/gtest.h>

#include <bit>
#include <sstream>

#include "support/generators.hpp"

namespace {

using namespace ehyb;
using ehyb::testing::from_triplets;

std::vector<index_t> neighbors(const AdjacencyGraph& g, index_t v) {
    auto n = g.neighbors(v);
    return {n.begin(), n.end()};
}

void expect_valid(const AdjacencyGraph& g, const PartitionMap& p, index_t capacity) {
    ASSERT_EQ(p.n_vertices(), g.n_vertices);
    std::vector<index_t> sizes(p.n_parts, 0);
    for (auto a : p.assignment) {
        ASSERT_LT(a, p.n_parts);
        ++sizes[a];
    }
    EXPECT_EQ(sizes, p.part_sizes);
    for (auto s : p.part_sizes) EXPECT_LE(s, capacity);
}

TEST(BuildGraph, IdentityHasNoEdges) {
    auto g = build_graph(ehyb::testing::identity(4));
    EXPECT_EQ(g.n_vertices, 4u);
    EXPECT_EQ(g.n_edges(), 0u);
}

TEST(BuildGraph, TridiagonalIsAChain) {
    auto g = build_graph(ehyb::testing::tridiagonal(4));
    EXPECT_EQ(g.n_edges(), 3u);
    EXPECT_EQ(neighbors(g, 0), (std::vector<index_t>{1}));
    EXPECT_EQ(neighbors(g, 1), (std::vector<index_t>{0, 2}));
    EXPECT_EQ(neighbors(g, 2), (std::vector<index_t>{1, 3}));
    EXPECT_EQ(neighbors(g, 3), (std::vector<index_t>{2}));
}

TEST(BuildGraph, SymmetrizesOneSidedEntries) {
    auto g = build_graph(from_triplets(6, 6, {{2, 5, 1.0}}));
    EXPECT_EQ(neighbors(g, 2), (std::vector<index_t>{5}));
    EXPECT_EQ(neighbors(g, 5), (std::vector<index_t>{2}));
}

TEST(BuildGraph, RejectsNonSquare) {
    EXPECT_THROW(build_graph(ehyb::testing::random_sparse(3, 4, 5, 1)), DimensionMismatch);
}

TEST(BuildGraph, IsSymmetricWithoutSelfLoops) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        auto g = build_graph(ehyb::testing::random_square(60, 0.05, s));
        for (index_t u = 0; u < g.n_vertices; ++u) {
            auto nu = g.neighbors(u);
            EXPECT_TRUE(std::is_sorted(nu.begin(), nu.end()));
            for (auto v : nu) {
                EXPECT_NE(u, v);
                auto nv = g.neighbors(v);
                EXPECT_TRUE(std::binary_search(nv.begin(), nv.end(), u));
            }
        }
    }
}

// Exhaustive minimum cut over all balanced 2-partitions of a small graph.
std::size_t brute_force_min_bisection(const AdjacencyGraph& g) {
    const index_t n = g.n_vertices;
    std::size_t best = SIZE_MAX;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<index_t>(std::popcount(mask)) != n / 2) continue;
        std::size_t cut = 0;
        for (index_t u = 0; u < n; ++u) {
            for (auto v : g.neighbors(u)) {
                if (u < v && ((mask >> u) & 1u) != ((mask >> v) & 1u)) ++cut;
            }
        }
        best = std::min(best, cut);
    }
    return best;
}

TEST(PartitionGraph, ChainOfEightSplitsInHalf) {
    auto g = build_graph(ehyb::testing::tridiagonal(8));
    ASSERT_EQ(brute_force_min_bisection(g), 1u);

    auto p = partition_graph(g, 2, 4);
    expect_valid(g, p, 4);
    EXPECT_EQ(edge_cut(g, p), 1u);
    for (index_t v = 0; v < 4; ++v) EXPECT_EQ(p.assignment[v], p.assignment[0]);
    for (index_t v = 4; v < 8; ++v) EXPECT_EQ(p.assignment[v], p.assignment[7]);
    EXPECT_NE(p.assignment[0], p.assignment[7]);
}

TEST(PartitionGraph, SinglePartitionHoldsEverything) {
    auto m = ehyb::testing::random_square(40, 0.1, 3);
    auto g = build_graph(m);
    auto p = partition_graph(g, 1, 40);
    EXPECT_EQ(p.part_sizes, (std::vector<index_t>{40}));
    EXPECT_EQ(edge_cut(g, p), 0u);
    EXPECT_DOUBLE_EQ(cut_metrics(m, p).inner_fraction, 1.0);
}

TEST(PartitionGraph, GridBeatsRandomPartition) {
    auto m = ehyb::testing::laplacian_2d(16, 16);
    auto g = build_graph(m);
    auto built = partition_graph(g, 4, 64, 7);
    auto random = random_partition(256, 4, 64, 7);
    expect_valid(g, built, 64);
    const double edges = static_cast<double>(g.n_edges());
    EXPECT_LT(edge_cut(g, built) / edges, edge_cut(g, random) / edges);
}

TEST(PartitionGraph, RejectsInfeasibleCapacity) {
    auto g = build_graph(ehyb::testing::tridiagonal(10));
    EXPECT_THROW(partition_graph(g, 3, 3), InfeasibleParams);
    EXPECT_THROW(partition_graph(g, 0, 100), InfeasibleParams);
}

TEST(PartitionGraph, IsolatedVerticesGoRoundRobin) {
    // Vertices 0..3 form a chain; 4..9 are isolated.
    auto m = from_triplets(10, 10, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}});
    auto g = build_graph(m);
    auto p = partition_graph(g, 3, 4);
    expect_valid(g, p, 4);
    for (index_t v = 1; v < 4; ++v) EXPECT_EQ(p.assignment[v], p.assignment[0]);
    EXPECT_EQ(p.assignment[0], 0u);
    // Partition 0 is full, so isolated vertices alternate over 1 and 2.
    EXPECT_EQ((std::vector<index_t>(p.assignment.begin() + 4, p.assignment.end())),
              (std::vector<index_t>{1, 2, 1, 2, 1, 2}));
}

TEST(PartitionGraph, CapacityAndDeterminismProperty) {
    for (std::uint64_t s = 0; s < 25; ++s) {
        const index_t n = 20 + static_cast<index_t>(s * 13);
        auto m = s % 2 ? ehyb::testing::random_square(n, 0.03, s) : ehyb::testing::random_banded(n, 4, s);
        auto g = build_graph(m);
        const index_t parts = 1 + static_cast<index_t>(s % 7);
        const index_t capacity = static_cast<index_t>(ceil_div(n, parts)) + static_cast<index_t>(s % 3);
        auto a = partition_graph(g, parts, capacity, s);
        auto b = partition_graph(g, parts, capacity, s);
        expect_valid(g, a, capacity);
        EXPECT_EQ(a, b);
    }
}

TEST(Rebalance, EnforcesCapacityOnOverfullInput) {
    auto m = ehyb::testing::laplacian_2d(10, 10);
    auto g = build_graph(m);
    std::vector<index_t> assignment(100, 0);
    for (index_t v = 90; v < 100; ++v) assignment[v] = 1;
    auto p = PartitionMap::from_assignment(4, assignment);
    rebalance(g, p, 25);
    expect_valid(g, p, 25);
}

TEST(Rebalance, MovesBoundaryVerticesFirst) {
    // Chain of 6 all in part 0 except vertex 5; capacity 4 forces one move
    // and vertex 4 is the only vertex adjacent to part 1.
    auto g = build_graph(ehyb::testing::tridiagonal(6));
    auto p = PartitionMap::from_assignment(2, {0, 0, 0, 0, 0, 1});
    rebalance(g, p, 4);
    EXPECT_EQ(p.assignment, (std::vector<index_t>{0, 0, 0, 0, 1, 1}));
}

TEST(CutMetrics, SinglePartitionIsAllInner) {
    auto m = ehyb::testing::random_square(30, 0.1, 5);
    auto c = cut_metrics(m, PartitionMap::from_assignment(1, std::vector<index_t>(30, 0)));
    EXPECT_EQ(c.extra_entries, 0u);
    EXPECT_DOUBLE_EQ(c.inner_fraction, 1.0);
}

TEST(CutMetrics, TridiagonalHalves) {
    auto m = ehyb::testing::tridiagonal(8);
    auto c = cut_metrics(m, PartitionMap::from_assignment(2, {0, 0, 0, 0, 1, 1, 1, 1}));
    EXPECT_EQ(c.extra_entries, 2u);
    EXPECT_EQ(c.inner_entries, 20u);
    EXPECT_DOUBLE_EQ(c.inner_fraction, 20.0 / 22.0);
}

TEST(CutMetrics, AlignedBlocksHaveNoExtras) {
    auto m = ehyb::testing::block_diagonal(4, 5);
    EXPECT_EQ(cut_metrics(m, contiguous_partition(20, 4, 5)).extra_entries, 0u);
}

TEST(CutMetrics, RejectsDimensionMismatch) {
    EXPECT_THROW(cut_metrics(ehyb::testing::identity(4), PartitionMap::from_assignment(1, {0, 0, 0})),
                 DimensionMismatch);
}

TEST(CutMetrics, BoundsAndMergeMonotonicity) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        auto m = ehyb::testing::random_square(64, 0.05, 100 + s);
        for (index_t i = 0; i < 64; i += 3) m.entries.push_back({i, i, 1.0});
        normalize(m);
        std::size_t diag = 0;
        for (const auto& e : m.entries) diag += e.row == e.col;

        auto p = random_partition(64, 4, 16, s);
        auto c = cut_metrics(m, p);
        EXPECT_EQ(c.inner_entries + c.extra_entries, m.nnz());
        EXPECT_GE(c.inner_fraction, static_cast<double>(diag) / m.nnz());
        EXPECT_LE(c.inner_fraction, 1.0);

        auto merged = p.assignment;
        for (auto& a : merged) a = a == 3 ? 2 : a;
        auto cm = cut_metrics(m, PartitionMap::from_assignment(4, merged));
        EXPECT_GE(cm.inner_entries, c.inner_entries);
    }
}

TEST(PartitionFile, LoadsMetisStyle) {
    std::istringstream in("0\n0\n1\n1\n");
    auto p = load_partition_file(in, 4);
    EXPECT_EQ(p.n_parts, 2u);
    EXPECT_EQ(p.part_sizes, (std::vector<index_t>{2, 2}));
}

TEST(PartitionFile, RoundTrips) {
    auto g = build_graph(ehyb::testing::laplacian_2d(9, 7));
    auto p = partition_graph(g, 5, 13, 3);
    std::stringstream buf;
    save_partition_file(p, buf);
    EXPECT_EQ(load_partition_file(buf, 63, p.n_parts), p);
}

TEST(PartitionFile, RejectsWrongLineCount) {
    std::istringstream in("0\n1\n0\n");
    EXPECT_THROW(load_partition_file(in, 4), ValidationError);
}

TEST(PartitionFile, RejectsIdsBeyondPartCount) {
    std::istringstream in("0\n3\n");
    EXPECT_THROW(load_partition_file(in, 2, 2), ValidationError);
    std::istringstream bad("0\n-1\n");
    EXPECT_THROW(load_partition_file(bad, 2), ParseError);
}

} // namespace
