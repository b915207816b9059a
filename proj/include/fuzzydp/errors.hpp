#pragma once

#include <stdexcept>
#include <string>

namespace fuzzydp {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DensityOutOfRange : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct InvalidSubset : Error { using Error::Error; };
struct NotConvex : Error { using Error::Error; };
struct TooLarge : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct ActionOutOfRange : Error { using Error::Error; };
struct InvalidGrid : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };
struct NonFiniteGradient : Error { using Error::Error; };
struct ConditionsUnmet : Error { using Error::Error; };

// File loading errors carry the offending line (1-based, 0 = whole file).
struct ParseError : Error {
    int line = 0;
    ParseError(const std::string& msg, int line_no)
        : Error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
};

// A violated model invariant, naming the failing location.
struct InvariantViolation : Error {
    std::string location;
    InvariantViolation(const std::string& msg, std::string where)
        : Error(msg + " [" + where + "]"), location(std::move(where)) {}
};

}  // namespace fuzzydp
