#pragma once

#include <stdexcept>
#include <string>

namespace freshness {

/// Failure categories surfaced by the solvers. The CLI maps these onto
/// process exit codes.
enum class ErrorKind {
    InvalidInput,
    InvalidParams,
    NonConvergence,
    MultiChain,
    TooLarge,
    DegenerateTriangle,
    NotFound,
    MaxIterations,
    PatternNotFound,
    NoSolution,
    InvalidBracket,
    LayoutMismatch,
    ParseError,
    ValidationError,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::MultiChain: return "MultiChainError";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::DegenerateTriangle: return "DegenerateTriangle";
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::MaxIterations: return "MaxIterations";
    case ErrorKind::PatternNotFound: return "PatternNotFound";
    case ErrorKind::NoSolution: return "NoSolution";
    case ErrorKind::InvalidBracket: return "InvalidBracket";
    case ErrorKind::LayoutMismatch: return "LayoutMismatch";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}

    ErrorKind kind() const noexcept { return kind_; }
    /// The message without the kind prefix.
    const std::string& message() const noexcept { return message_; }

private:
    ErrorKind kind_;
    std::string message_;
};

} // namespace freshness
