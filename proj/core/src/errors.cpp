#include "branchwave/errors.hpp"

namespace branchwave {

const char* kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::SegmentThroughBranchPoint: return "SegmentThroughBranchPoint";
    case ErrorKind::EndpointOnCut: return "EndpointOnCut";
    case ErrorKind::InvalidPoint: return "InvalidPoint";
    case ErrorKind::BranchPointOnGrid: return "BranchPointOnGrid";
    case ErrorKind::ExtentTooSmall: return "ExtentTooSmall";
    case ErrorKind::EmptySupport: return "EmptySupport";
    case ErrorKind::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::DegenerateMetric: return "DegenerateMetric";
    case ErrorKind::SolverDiverged: return "SolverDiverged";
    case ErrorKind::BoundaryContamination: return "BoundaryContamination";
    case ErrorKind::ResolutionViolation: return "ResolutionViolation";
    case ErrorKind::CutOverlap: return "CutOverlap";
    case ErrorKind::TailNotBounded: return "TailNotBounded";
    case ErrorKind::ZeroGamma: return "ZeroGamma";
    case ErrorKind::AtPuncture: return "AtPuncture";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::EigensolverNotConverged: return "EigensolverNotConverged";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

bool is_validation_error(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::SegmentThroughBranchPoint:
    case ErrorKind::EndpointOnCut:
    case ErrorKind::InvalidPoint:
    case ErrorKind::BranchPointOnGrid:
    case ErrorKind::ExtentTooSmall:
    case ErrorKind::EmptySupport:
    case ErrorKind::GridMismatch:
    case ErrorKind::ResolutionViolation:
    case ErrorKind::CutOverlap:
    case ErrorKind::ZeroGamma:
    case ErrorKind::AtPuncture:
    case ErrorKind::InvalidConfig:
    case ErrorKind::Io:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(kind_name(kind)) + ": " + detail), kind_(kind) {}

}  // namespace branchwave
