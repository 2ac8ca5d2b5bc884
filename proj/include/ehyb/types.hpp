#ifndef EHYB_TYPES_HPP
#define EHYB_TYPES_HPP

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ehyb {

/// Index type used for every stored row/column/offset array.
using index_t = std::uint32_t;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed text input. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Well-formed input that violates a structural invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

class UnsupportedFormat : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// No parameter choice satisfies the device constraints.
class InfeasibleParams : public Error {
public:
    using Error::Error;
};

class ContainerError : public Error {
public:
    enum class Kind { bad_magic, bad_version, bad_precision, truncated, checksum, malformed };

    ContainerError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

constexpr std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

constexpr std::uint64_t align_up(std::uint64_t a, std::uint64_t b) { return ceil_div(a, b) * b; }

} // namespace ehyb

#endif // EHYB_TYPES_HPP
