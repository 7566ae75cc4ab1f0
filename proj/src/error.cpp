#include "sketchsearch/error.hpp"

namespace sketchsearch {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::EmptyScript: return "EmptyScript";
        case ErrorKind::UnbalancedProof: return "UnbalancedProof";
        case ErrorKind::InvalidLine: return "InvalidLine";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorKind::MalformedLevels: return "MalformedLevels";
        case ErrorKind::UnexpectedSorry: return "UnexpectedSorry";
        case ErrorKind::OrphanSorry: return "OrphanSorry";
        case ErrorKind::SurplusSketch: return "SurplusSketch";
        case ErrorKind::AlignmentError: return "AlignmentError";
        case ErrorKind::UnknownTheorem: return "UnknownTheorem";
        case ErrorKind::SessionLimit: return "SessionLimit";
        case ErrorKind::DeadSession: return "DeadSession";
        case ErrorKind::SpecOutOfRange: return "SpecOutOfRange";
        case ErrorKind::EnvironmentDown: return "EnvironmentDown";
        case ErrorKind::ProtocolError: return "ProtocolError";
        case ErrorKind::PolicyError: return "PolicyError";
        case ErrorKind::MisalignedTruth: return "MisalignedTruth";
        case ErrorKind::FrontierEmpty: return "FrontierEmpty";
        case ErrorKind::NoUnprovedSorry: return "NoUnprovedSorry";
        case ErrorKind::DanglingSorry: return "DanglingSorry";
        case ErrorKind::InvalidBudget: return "InvalidBudget";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::NoProofs: return "NoProofs";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace sketchsearch
