#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qtrack {

enum class ErrorKind {
    NonFiniteState,
    NotPure,
    InvalidGrid,
    DegeneratePosterior,
    IncompatibleSteps,
    BandEmpty,
    OutOfRange,
    NoConvergence,
    RecordTooShort,
    BandOutOfRange,
    InvalidArgument,
    Config,
    Io,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::NotPure: return "NotPure";
    case ErrorKind::InvalidGrid: return "InvalidGrid";
    case ErrorKind::DegeneratePosterior: return "DegeneratePosterior";
    case ErrorKind::IncompatibleSteps: return "IncompatibleSteps";
    case ErrorKind::BandEmpty: return "BandEmpty";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::RecordTooShort: return "RecordTooShort";
    case ErrorKind::BandOutOfRange: return "BandOutOfRange";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Config: return "Config";
    case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-readable category.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace qtrack
