#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace idlewave {

/// Virtual time in integer clock cycles. All simulator timestamps use this unit;
/// seconds are derived through the configured clock rate.
using Cycles = std::uint64_t;

/// Signed cycle arithmetic for fitted slopes and phase offsets.
using SignedCycles = std::int64_t;

using Rank = std::uint32_t;
using CycleIndex = std::uint32_t;

enum class Direction : std::uint8_t { Left = 0, Right = 1 };

inline constexpr Direction opposite(Direction d) {
    return d == Direction::Left ? Direction::Right : Direction::Left;
}

inline constexpr char direction_char(Direction d) {
    return d == Direction::Left ? 'L' : 'R';
}

namespace detail {

/// Shortest representation that parses back to the same double. Used by every
/// canonical serializer so identical values always print identically.
inline std::string format_double(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

}  // namespace detail

// Error hierarchy. Everything user-facing derives from Error; InternalError
// indicates a simulator bug (broken invariant), not bad input.

class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration; the message names the offending field.
class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string& msg) : Error("config error: " + msg) {}
};

/// Malformed input file; the message carries a line or row number.
class ParseError : public Error {
  public:
    explicit ParseError(const std::string& msg) : Error("parse error: " + msg) {}
};

/// Structurally valid input that violates a data invariant.
class ValidationError : public Error {
  public:
    explicit ValidationError(const std::string& msg) : Error("validation error: " + msg) {}
};

/// Caller passed inconsistent arguments (missing shift, bad rank selection).
class ArgumentError : public Error {
  public:
    explicit ArgumentError(const std::string& msg) : Error("argument error: " + msg) {}
};

/// Analysis cannot proceed: fewer usable ranks than the method requires.
class InsufficientDataError : public Error {
  public:
    explicit InsufficientDataError(const std::string& msg)
        : Error("insufficient data: " + msg) {}
};

/// Phase extraction on a zero-variance series.
class UndefinedPhaseError : public Error {
  public:
    explicit UndefinedPhaseError(const std::string& msg)
        : Error("undefined phase: " + msg) {}
};

/// Internal consistency failure: indicates a bug in the engine itself.
class InternalError : public Error {
  public:
    explicit InternalError(const std::string& msg) : Error("internal error: " + msg) {}
};

}  // namespace idlewave
