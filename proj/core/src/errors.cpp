#include "tracelab/errors.hpp"

namespace tracelab {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::SingularGradient: return "SingularGradient";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::EmptyComponent: return "EmptyComponent";
    case ErrorKind::EscapedDomain: return "EscapedDomain";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::PoleAtHalf: return "PoleAtHalf";
    case ErrorKind::AmbiguousNeutral: return "AmbiguousNeutral";
    case ErrorKind::NotHyperbolic: return "NotHyperbolic";
    case ErrorKind::SingularityApproach: return "SingularityApproach";
    case ErrorKind::PoorFit: return "PoorFit";
    case ErrorKind::NoGaps: return "NoGaps";
    case ErrorKind::DegenerateHull: return "DegenerateHull";
    case ErrorKind::InsufficientScales: return "InsufficientScales";
    case ErrorKind::EverythingDies: return "EverythingDies";
    case ErrorKind::NearSingularSeed: return "NearSingularSeed";
    case ErrorKind::BranchLost: return "BranchLost";
  }
  return "Unknown";
}

void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, std::string(to_string(kind)) + ": " + what);
}

}  // namespace tracelab
