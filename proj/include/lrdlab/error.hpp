#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lrdlab {

/// Failure categories raised by the library. Every throw site uses one of
/// these so callers (and the CLI) can map failures to exit codes.
enum class ErrorCode {
    InvalidHurst,
    TruncationTooShort,
    LagOutOfRange,
    EmbeddingNotPSD,
    OrderTooLarge,
    NonIntegrable,
    RankUndefined,
    InfiniteVariance,
    UnsupportedFunctional,
    NoPowerTail,
    NTooSmall,
    InvalidParameter,
    RegimeMismatch,
    GridTooCoarse,
    DegenerateRectangle,
    TooFewExceedances,
    GridUnsuitable,
    ConfigError,
    IoError,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidHurst: return "InvalidHurst";
        case ErrorCode::TruncationTooShort: return "TruncationTooShort";
        case ErrorCode::LagOutOfRange: return "LagOutOfRange";
        case ErrorCode::EmbeddingNotPSD: return "EmbeddingNotPSD";
        case ErrorCode::OrderTooLarge: return "OrderTooLarge";
        case ErrorCode::NonIntegrable: return "NonIntegrable";
        case ErrorCode::RankUndefined: return "RankUndefined";
        case ErrorCode::InfiniteVariance: return "InfiniteVariance";
        case ErrorCode::UnsupportedFunctional: return "UnsupportedFunctional";
        case ErrorCode::NoPowerTail: return "NoPowerTail";
        case ErrorCode::NTooSmall: return "NTooSmall";
        case ErrorCode::InvalidParameter: return "InvalidParameter";
        case ErrorCode::RegimeMismatch: return "RegimeMismatch";
        case ErrorCode::GridTooCoarse: return "GridTooCoarse";
        case ErrorCode::DegenerateRectangle: return "DegenerateRectangle";
        case ErrorCode::TooFewExceedances: return "TooFewExceedances";
        case ErrorCode::GridUnsuitable: return "GridUnsuitable";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
    if (!condition) fail(code, what);
}

}  // namespace lrdlab
