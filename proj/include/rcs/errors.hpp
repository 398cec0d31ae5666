#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rcs {

enum class ErrorKind {
    PoleOnAxis,
    DegenerateResult,
    EigenFailure,
    ImproperTf,
    ParseError,
    NonMonotone,
    TooShort,
    OutOfRange,
    BadRange,
    BadParams,
    DomainError,
    NotRealizable,
    ImproperComponent,
    DividedByLoopZero,
    SingularResolvent,
    OrderExceeded,
    SchemaError,
    Usage,
};

constexpr std::string_view to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::PoleOnAxis: return "PoleOnAxis";
        case ErrorKind::DegenerateResult: return "DegenerateResult";
        case ErrorKind::EigenFailure: return "EigenFailure";
        case ErrorKind::ImproperTf: return "ImproperTf";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::NonMonotone: return "NonMonotone";
        case ErrorKind::TooShort: return "TooShort";
        case ErrorKind::OutOfRange: return "OutOfRange";
        case ErrorKind::BadRange: return "BadRange";
        case ErrorKind::BadParams: return "BadParams";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::NotRealizable: return "NotRealizable";
        case ErrorKind::ImproperComponent: return "ImproperComponent";
        case ErrorKind::DividedByLoopZero: return "DividedByLoopZero";
        case ErrorKind::SingularResolvent: return "SingularResolvent";
        case ErrorKind::OrderExceeded: return "OrderExceeded";
        case ErrorKind::SchemaError: return "SchemaError";
        case ErrorKind::Usage: return "Usage";
    }
    return "Unknown";
}

/// %g formatting for diagnostics.
inline std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace rcs
