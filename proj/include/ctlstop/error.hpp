#pragma once

#include <stdexcept>
#include <string>

namespace ctlstop {

enum class Errc {
    CrossingNotBracketed,
    AmbiguousRegion,
    BracketFailure,
    RegimeGap,
    RegimeOverlap,
    ComplexRoot,
    OutOfSupportedRange,
    GridTooCoarse,
    AtBreakpoint,
    UnverifiedGenerator,
    StepTooLarge,
    NoConvergence,
    NonMonotoneScheme,
    InvalidConfig,
    InvalidModel,
    Inconsistent,
};

inline const char* to_string(Errc c) {
    switch (c) {
    case Errc::CrossingNotBracketed: return "CrossingNotBracketed";
    case Errc::AmbiguousRegion: return "AmbiguousRegion";
    case Errc::BracketFailure: return "BracketFailure";
    case Errc::RegimeGap: return "RegimeGap";
    case Errc::RegimeOverlap: return "RegimeOverlap";
    case Errc::ComplexRoot: return "ComplexRoot";
    case Errc::OutOfSupportedRange: return "OutOfSupportedRange";
    case Errc::GridTooCoarse: return "GridTooCoarse";
    case Errc::AtBreakpoint: return "AtBreakpoint";
    case Errc::UnverifiedGenerator: return "UnverifiedGenerator";
    case Errc::StepTooLarge: return "StepTooLarge";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::NonMonotoneScheme: return "NonMonotoneScheme";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::InvalidModel: return "InvalidModel";
    case Errc::Inconsistent: return "Inconsistent";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace ctlstop
