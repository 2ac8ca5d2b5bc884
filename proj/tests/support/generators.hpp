#ifndef EHYB_TESTS_GENERATORS_HPP
#define EHYB_TESTS_GENERATORS_HPP

#include <ehyb/ehyb.hpp>

#include <random>
#include <set>
#include <string>
#include <vector>

namespace ehyb::testing {

inline CooMatrix from_triplets(index_t n_rows, index_t n_cols, std::vector<CooEntry> entries) {
    CooMatrix m{n_rows, n_cols, std::move(entries)};
    normalize(m);
    return m;
}

inline CooMatrix identity(index_t n) {
    std::vector<CooEntry> e;
    for (index_t i = 0; i < n; ++i) e.push_back({i, i, 1.0});
    return from_triplets(n, n, std::move(e));
}

inline CooMatrix zero_matrix(index_t n) { return from_triplets(n, n, {}); }

/// 2 on the diagonal, -1 on both off-diagonals.
inline CooMatrix tridiagonal(index_t n) {
    std::vector<CooEntry> e;
    for (index_t i = 0; i < n; ++i) {
        if (i > 0) e.push_back({i, i - 1, -1.0});
        e.push_back({i, i, 2.0});
        if (i + 1 < n) e.push_back({i, i + 1, -1.0});
    }
    return from_triplets(n, n, std::move(e));
}

inline CooMatrix laplacian_2d(index_t nx, index_t ny) {
    std::vector<CooEntry> e;
    auto id = [nx](index_t x, index_t y) { return y * nx + x; };
    for (index_t y = 0; y < ny; ++y) {
        for (index_t x = 0; x < nx; ++x) {
            const auto r = id(x, y);
            e.push_back({r, r, 4.0});
            if (x > 0) e.push_back({r, id(x - 1, y), -1.0});
            if (x + 1 < nx) e.push_back({r, id(x + 1, y), -1.0});
            if (y > 0) e.push_back({r, id(x, y - 1), -1.0});
            if (y + 1 < ny) e.push_back({r, id(x, y + 1), -1.0});
        }
    }
    return from_triplets(nx * ny, nx * ny, std::move(e));
}

inline CooMatrix laplacian_3d(index_t nx, index_t ny, index_t nz) {
    std::vector<CooEntry> e;
    auto id = [=](index_t x, index_t y, index_t z) { return (z * ny + y) * nx + x; };
    for (index_t z = 0; z < nz; ++z) {
        for (index_t y = 0; y < ny; ++y) {
            for (index_t x = 0; x < nx; ++x) {
                const auto r = id(x, y, z);
                e.push_back({r, r, 6.0});
                if (x > 0) e.push_back({r, id(x - 1, y, z), -1.0});
                if (x + 1 < nx) e.push_back({r, id(x + 1, y, z), -1.0});
                if (y > 0) e.push_back({r, id(x, y - 1, z), -1.0});
                if (y + 1 < ny) e.push_back({r, id(x, y + 1, z), -1.0});
                if (z > 0) e.push_back({r, id(x, y, z - 1), -1.0});
                if (z + 1 < nz) e.push_back({r, id(x, y, z + 1), -1.0});
            }
        }
    }
    const auto n = nx * ny * nz;
    return from_triplets(n, n, std::move(e));
}

/// Dense blocks of `block` rows along the diagonal.
inline CooMatrix block_diagonal(index_t n_blocks, index_t block) {
    std::vector<CooEntry> e;
    for (index_t b = 0; b < n_blocks; ++b) {
        for (index_t i = 0; i < block; ++i) {
            for (index_t j = 0; j < block; ++j) {
                e.push_back({b * block + i, b * block + j, 1.0 + i + 0.5 * j});
            }
        }
    }
    const auto n = n_blocks * block;
    return from_triplets(n, n, std::move(e));
}

/// Uniformly placed entries with values in [-1, 1]; duplicates collapse.
inline CooMatrix random_sparse(index_t n_rows, index_t n_cols, std::size_t target_nnz, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    std::set<std::pair<index_t, index_t>> seen;
    std::vector<CooEntry> e;
    const auto cap = std::min<std::size_t>(target_nnz, std::size_t{n_rows} * n_cols);
    while (e.size() < cap) {
        const auto r = static_cast<index_t>(rng() % n_rows);
        const auto c = static_cast<index_t>(rng() % n_cols);
        if (seen.insert({r, c}).second) e.push_back({r, c, value(rng)});
    }
    return from_triplets(n_rows, n_cols, std::move(e));
}

inline CooMatrix random_square(index_t n, double density, std::uint64_t seed) {
    const auto target = static_cast<std::size_t>(density * n * n + 0.5);
    return random_sparse(n, n, std::max<std::size_t>(1, target), seed);
}

/// Random lengths per row so partitions see a spread of inner widths;
/// a few rows are left empty.
inline CooMatrix random_banded(index_t n, index_t band, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    std::vector<CooEntry> e;
    for (index_t r = 0; r < n; ++r) {
        if (rng() % 11 == 0) continue;
        const index_t len = 1 + static_cast<index_t>(rng() % (2 * band));
        for (index_t k = 0; k < len; ++k) {
            const auto offset = static_cast<std::int64_t>(rng() % (2 * band + 1)) - band;
            const auto c = static_cast<std::int64_t>(r) + offset;
            if (c >= 0 && c < n) e.push_back({r, static_cast<index_t>(c), value(rng)});
        }
    }
    return from_triplets(n, n, std::move(e));
}

struct CorpusEntry {
    std::string name;
    CooMatrix matrix;
    DeviceProfile profile;
};

/// Small device profiles that force several partitions, narrow warps and
/// multi-K parameter choices on test-sized matrices.
inline std::vector<DeviceProfile> test_profiles() {
    return {
        {4, 8, 512},     // 64 doubles per block
        {2, 4, 128},     // 16 doubles per block
        {3, 32, 4096},   // 512 doubles per block
        {8, 16, 1024},
        {80, 32, 49152}, // default device
    };
}

/// Mixed corpus used by the property and acceptance suites.
inline std::vector<CorpusEntry> corpus() {
    std::vector<CorpusEntry> out;
    const auto profiles = test_profiles();
    std::size_t pi = 0;
    auto add = [&](std::string name, CooMatrix m) {
        out.push_back({std::move(name), std::move(m), profiles[pi++ % profiles.size()]});
    };
    add("identity_4", identity(4));
    add("identity_100", identity(100));
    add("zero_37", zero_matrix(37));
    add("tridiag_8", tridiagonal(8));
    add("tridiag_300", tridiagonal(300));
    add("block_diag_8x4", block_diagonal(8, 4));
    add("block_diag_5x13", block_diagonal(5, 13));
    add("lap2d_16x16", laplacian_2d(16, 16));
    add("lap2d_33x17", laplacian_2d(33, 17));
    add("lap3d_8x8x8", laplacian_3d(8, 8, 8));
    add("lap3d_5x7x9", laplacian_3d(5, 7, 9));
    for (std::uint64_t s = 0; s < 30; ++s) {
        const index_t n = 8 + static_cast<index_t>((s * 97) % 505);
        const double density = 0.001 + 0.099 * static_cast<double>((s * 37) % 29) / 28.0;
        add("random_" + std::to_string(n) + "_s" + std::to_string(s), random_square(n, density, 1000 + s));
    }
    for (std::uint64_t s = 0; s < 10; ++s) {
        const index_t n = 50 + static_cast<index_t>(s * 41);
        add("banded_" + std::to_string(n) + "_s" + std::to_string(s), random_banded(n, 3 + s % 5, 2000 + s));
    }
    return out;
}

} // namespace ehyb::testing

#endif // EHYB_TESTS_GENERATORS_HPP
