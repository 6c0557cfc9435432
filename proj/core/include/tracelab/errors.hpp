#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tracelab {

enum class ErrorKind {
  InvalidArgument,
  NonFinite,
  SingularGradient,
  NoConvergence,
  EmptyComponent,
  EscapedDomain,
  SingularJacobian,
  PoleAtHalf,
  AmbiguousNeutral,
  NotHyperbolic,
  SingularityApproach,
  PoorFit,
  NoGaps,
  DegenerateHull,
  InsufficientScales,
  EverythingDies,
  NearSingularSeed,
  BranchLost,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Numerical exceptions carry a machine-readable kind in addition to the
/// message; the CLI maps them to exit codes and the service to HTTP status.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for kinds caused by bad caller input rather than numerics.
  bool is_config_error() const noexcept {
    return kind_ == ErrorKind::InvalidArgument || kind_ == ErrorKind::NonFinite;
  }

private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace tracelab
