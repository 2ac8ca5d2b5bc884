#ifndef EHYB_CONTAINER_HPP
#define EHYB_CONTAINER_HPP

#include "format.hpp"
#include "types.hpp"

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <iterator>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ehyb {

/// Binary container layout (all integers little-endian):
///
///   "EHYB"  u32 version  u32 precision(4|8)
///   u32 num_processors  u32 warp_size  u64 shm_max
///   u32 k  u32 n_parts  u32 vec_cache_size
///   u32 dimension  u32 padded_dimension  u64 nnz_ell  u64 nnz_er
///   arrays, each as u64 element count followed by the elements:
///     reorder_table inverse_table arrange_table(pairs) y_idx_er
///     val_ell col_ell(u16) position_ell width_ell part_boundary
///     val_er col_er position_er width_er
///   u32 CRC-32 of every preceding byte
inline constexpr char container_magic[4] = {'E', 'H', 'Y', 'B'};
inline constexpr std::uint32_t container_version = 1;

namespace detail {

class ByteWriter {
public:
    void raw(const void* data, std::size_t n) {
        auto p = static_cast<const unsigned char*>(data);
        bytes_.insert(bytes_.end(), p, p + n);
    }

    template <typename T>
    void le(T v) {
        using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                     std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
        auto u = std::bit_cast<U>(v);
        for (std::size_t i = 0; i < sizeof(U); ++i) bytes_.push_back(static_cast<unsigned char>(u >> (8 * i)));
    }

    template <typename T>
    void array(std::span<const T> values) {
        le<std::uint64_t>(values.size());
        for (const auto& v : values) le(v);
    }

    std::vector<unsigned char>& bytes() { return bytes_; }

private:
    std::vector<unsigned char> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

    template <typename T>
    T le() {
        using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                     std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
        need(sizeof(U));
        U u = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) u |= static_cast<U>(U{bytes_[pos_ + i]} << (8 * i));
        pos_ += sizeof(U);
        return std::bit_cast<T>(u);
    }

    template <typename T>
    std::vector<T> array() {
        const auto n = le<std::uint64_t>();
        if (n > (bytes_.size() - pos_) / sizeof(T)) truncated();
        std::vector<T> out(n);
        for (auto& v : out) v = le<T>();
        return out;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) truncated();
    }
    [[noreturn]] static void truncated() {
        throw ContainerError(ContainerError::Kind::truncated, "container is truncated");
    }

    std::span<const unsigned char> bytes_;
    std::size_t pos_ = 0;
};

inline std::uint32_t crc32_of(std::span<const unsigned char> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    std::size_t offset = 0;
    while (offset < bytes.size()) {
        auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
        crc = ::crc32(crc, bytes.data() + offset, chunk);
        offset += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

inline std::vector<unsigned char> read_all(std::istream& in) {
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline constexpr std::size_t container_header_size = 12;

inline std::uint32_t check_header(std::span<const unsigned char> bytes) {
    if (bytes.size() < container_header_size + 4) {
        throw ContainerError(ContainerError::Kind::truncated, "container is truncated");
    }
    if (std::memcmp(bytes.data(), container_magic, 4) != 0) {
        throw ContainerError(ContainerError::Kind::bad_magic, "not an EHYB container (bad magic)");
    }
    ByteReader r(bytes.subspan(4));
    const auto version = r.le<std::uint32_t>();
    if (version != container_version) {
        throw ContainerError(ContainerError::Kind::bad_version,
                             "unsupported container version " + std::to_string(version));
    }
    const auto precision = r.le<std::uint32_t>();
    if (precision != 4 && precision != 8) {
        throw ContainerError(ContainerError::Kind::bad_precision, "invalid precision tag " + std::to_string(precision));
    }
    const auto payload = bytes.first(bytes.size() - 4);
    ByteReader tail(bytes.last(4));
    if (tail.le<std::uint32_t>() != crc32_of(payload)) {
        throw ContainerError(ContainerError::Kind::checksum, "container checksum mismatch");
    }
    return precision;
}

template <typename Scalar>
void check_consistent(const EhybMatrix<Scalar>& e) {
    auto fail = [](const std::string& what) {
        throw ContainerError(ContainerError::Kind::malformed, "inconsistent container: " + what);
    };
    const auto warp = e.params.profile.warp_size;
    if (warp == 0 || e.params.vec_cache_size == 0 || e.params.vec_cache_size % warp != 0) fail("cache window");
    if (e.padded_dimension != e.params.padded_dimension()) fail("padded dimension");
    if (e.plan.reorder_table.size() != e.padded_dimension || e.plan.inverse_table.size() != e.padded_dimension) {
        fail("permutation length");
    }
    if (e.plan.dimension != e.dimension || e.dimension > e.padded_dimension) fail("dimension");
    if (e.width_ell.size() != e.padded_dimension / warp || e.position_ell.size() != e.width_ell.size() + 1) {
        fail("ELL slice arrays");
    }
    if (e.part_boundary.size() != std::size_t{e.params.n_parts} + 1) fail("partition boundaries");
    if (e.val_ell.size() != e.position_ell.back() || e.col_ell.size() != e.val_ell.size()) fail("ELL slots");
    if (e.width_er.size() != ceil_div(e.plan.y_idx_er.size(), warp) || e.position_er.size() != e.width_er.size() + 1) {
        fail("ER slice arrays");
    }
    if (e.val_er.size() != e.position_er.back() || e.col_er.size() != e.val_er.size()) fail("ER slots");
    if (e.plan.arrange_table.size() != e.plan.y_idx_er.size()) fail("ER tables");
    for (auto r : e.plan.reorder_table) {
        if (r >= e.padded_dimension) fail("permutation entry");
    }
    for (auto r : e.plan.y_idx_er) {
        if (r >= e.padded_dimension) fail("ER row index");
    }
    for (auto c : e.col_er) {
        if (c >= e.padded_dimension) fail("ER column");
    }
    for (auto c : e.col_ell) {
        if (c >= e.params.vec_cache_size) fail("ELL column");
    }
}

} // namespace detail

template <typename Scalar>
void write_ehyb_container(const EhybMatrix<Scalar>& e, std::ostream& out) {
    detail::ByteWriter w;
    w.raw(container_magic, 4);
    w.le<std::uint32_t>(container_version);
    w.le<std::uint32_t>(sizeof(Scalar));
    w.le<std::uint32_t>(e.params.profile.num_processors);
    w.le<std::uint32_t>(e.params.profile.warp_size);
    w.le<std::uint64_t>(e.params.profile.shm_max);
    w.le<std::uint32_t>(e.params.k);
    w.le<std::uint32_t>(e.params.n_parts);
    w.le<std::uint32_t>(e.params.vec_cache_size);
    w.le<std::uint32_t>(e.dimension);
    w.le<std::uint32_t>(e.padded_dimension);
    w.le<std::uint64_t>(e.nnz_ell);
    w.le<std::uint64_t>(e.nnz_er);
    w.array<index_t>(e.plan.reorder_table);
    w.array<index_t>(e.plan.inverse_table);
    w.le<std::uint64_t>(e.plan.arrange_table.size());
    for (const auto& [row, slot] : e.plan.arrange_table) {
        w.le(row);
        w.le(slot);
    }
    w.array<index_t>(e.plan.y_idx_er);
    w.array<Scalar>(e.val_ell);
    w.array<std::uint16_t>(e.col_ell);
    w.array<index_t>(e.position_ell);
    w.array<index_t>(e.width_ell);
    w.array<index_t>(e.part_boundary);
    w.array<Scalar>(e.val_er);
    w.array<index_t>(e.col_er);
    w.array<index_t>(e.position_er);
    w.array<index_t>(e.width_er);
    w.le<std::uint32_t>(detail::crc32_of(w.bytes()));
    out.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw Error("failed to write container");
}

namespace detail {

template <typename Scalar>
EhybMatrix<Scalar> decode_container(std::span<const unsigned char> bytes) {
    ByteReader r(bytes.subspan(container_header_size, bytes.size() - container_header_size - 4));
    EhybMatrix<Scalar> e;
    e.params.tau = sizeof(Scalar);
    e.params.profile.num_processors = r.le<std::uint32_t>();
    e.params.profile.warp_size = r.le<std::uint32_t>();
    e.params.profile.shm_max = r.le<std::uint64_t>();
    e.params.k = r.le<std::uint32_t>();
    e.params.n_parts = r.le<std::uint32_t>();
    e.params.vec_cache_size = r.le<std::uint32_t>();
    e.dimension = r.le<std::uint32_t>();
    e.padded_dimension = r.le<std::uint32_t>();
    e.nnz_ell = r.le<std::uint64_t>();
    e.nnz_er = r.le<std::uint64_t>();
    e.plan.dimension = e.dimension;
    e.plan.reorder_table = r.array<index_t>();
    e.plan.inverse_table = r.array<index_t>();
    const auto n_pairs = r.le<std::uint64_t>();
    if (n_pairs > r.remaining() / 8) throw ContainerError(ContainerError::Kind::truncated, "container is truncated");
    e.plan.arrange_table.resize(n_pairs);
    for (auto& [row, slot] : e.plan.arrange_table) {
        row = r.le<index_t>();
        slot = r.le<index_t>();
    }
    e.plan.y_idx_er = r.array<index_t>();
    e.val_ell = r.array<Scalar>();
    e.col_ell = r.array<std::uint16_t>();
    e.position_ell = r.array<index_t>();
    e.width_ell = r.array<index_t>();
    e.part_boundary = r.array<index_t>();
    e.val_er = r.array<Scalar>();
    e.col_er = r.array<index_t>();
    e.position_er = r.array<index_t>();
    e.width_er = r.array<index_t>();
    if (r.remaining() != 0) throw ContainerError(ContainerError::Kind::malformed, "trailing bytes in container");
    check_consistent(e);
    return e;
}

} // namespace detail

/// Reads a container whose precision tag matches `Scalar`.
template <typename Scalar>
EhybMatrix<Scalar> read_ehyb_container(std::istream& in) {
    const auto bytes = detail::read_all(in);
    const auto precision = detail::check_header(bytes);
    if (precision != sizeof(Scalar)) {
        throw ContainerError(ContainerError::Kind::bad_precision,
                             "container holds " + std::to_string(precision) + "-byte values, expected " +
                                 std::to_string(sizeof(Scalar)));
    }
    return detail::decode_container<Scalar>(bytes);
}

using AnyEhybMatrix = std::variant<EhybMatrix<float>, EhybMatrix<double>>;

/// Reads a container of either precision.
inline AnyEhybMatrix read_any_ehyb_container(std::istream& in) {
    const auto bytes = detail::read_all(in);
    if (detail::check_header(bytes) == 4) return detail::decode_container<float>(bytes);
    return detail::decode_container<double>(bytes);
}

} // namespace ehyb

#endif // EHYB_CONTAINER_HPP
