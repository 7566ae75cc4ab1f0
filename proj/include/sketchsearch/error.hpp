#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sketchsearch {

enum class ErrorKind {
    // script-model
    EmptyScript,
    UnbalancedProof,
    InvalidLine,
    ParseError,
    // sketch-extractor
    IndexOutOfRange,
    MalformedLevels,
    UnexpectedSorry,
    OrphanSorry,
    SurplusSketch,
    AlignmentError,
    // environment
    UnknownTheorem,
    SessionLimit,
    DeadSession,
    SpecOutOfRange,
    EnvironmentDown,
    ProtocolError,
    // policy
    PolicyError,
    MisalignedTruth,
    // search
    FrontierEmpty,
    NoUnprovedSorry,
    DanglingSorry,
    InvalidBudget,
    // harness
    InvalidConfig,
    NoProofs,
    Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

    ErrorKind kind() const noexcept { return kind_; }
    /// The message without the kind prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

}  // namespace sketchsearch
