#pragma once

#include <stdexcept>
#include <string>

namespace branchwave {

enum class ErrorKind {
  SegmentThroughBranchPoint,
  EndpointOnCut,
  InvalidPoint,
  BranchPointOnGrid,
  ExtentTooSmall,
  EmptySupport,
  QuadratureNotConverged,
  GridMismatch,
  DegenerateMetric,
  SolverDiverged,
  BoundaryContamination,
  ResolutionViolation,
  CutOverlap,
  TailNotBounded,
  ZeroGamma,
  AtPuncture,
  NotConverged,
  EigensolverNotConverged,
  InvalidConfig,
  Io,
};

const char* kind_name(ErrorKind kind) noexcept;

// Validation errors map to CLI exit code 2, numerical-contract failures to 3.
bool is_validation_error(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace branchwave
