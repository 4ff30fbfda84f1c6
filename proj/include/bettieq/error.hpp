#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bettieq {

enum class ErrorKind {
    InvalidInput,
    InvalidParam,
    UnsupportedMetric,
    OutOfRange,
    TooLarge,
    UndefinedScore,
    BudgetExceeded,
    DegreeCapExceeded,
    RejectionStall,
    BoundaryError,
    Degenerate,
    NotInDelta,
    QuadratureError,
    ConfigError,
    IoError,
};

inline std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::InvalidParam: return "InvalidParam";
    case ErrorKind::UnsupportedMetric: return "UnsupportedMetric";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::UndefinedScore: return "UndefinedScore";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::DegreeCapExceeded: return "DegreeCapExceeded";
    case ErrorKind::RejectionStall: return "RejectionStall";
    case ErrorKind::BoundaryError: return "BoundaryError";
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::NotInDelta: return "NotInDelta";
    case ErrorKind::QuadratureError: return "QuadratureError";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

/// Single exception type for the library; `kind()` tells callers which
/// contract was violated.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message)
{
    throw Error(kind, message);
}

} // namespace bettieq
