#pragma once

// Periodic orbits of T on S_V: constrained Newton, monodromy spectrum and
// stability, continuation in V, and seeding from rational points of the cat map.

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tracelab/maps.hpp"

namespace tracelab {

enum class Stability { Elliptic, Hyperbolic, ReflectionHyperbolic, Parabolic };
std::string_view to_string(Stability s) noexcept;

struct PeriodicOrbit {
  double V = 0.0;
  int period = 1;
  std::vector<Point3> points;  // points[i+1] = T(points[i]), length = period
  Matrix3 monodromy = Matrix3::Identity();
  double residual_trace = 0.0;  // trace used for classification (doubled pair when odd)
  double raw_trace = 0.0;       // trace of the undoubled surface pair
  Stability stability = Stability::Hyperbolic;
  double newton_residual = 0.0;
  int iterations = 0;
  int minimal_period = 1;
  std::vector<std::string> warnings;

  bool lower_period() const { return minimal_period < period; }
};

struct FindOptions {
  int max_iter = 50;
  double step_tol = 1e-12;
  double max_condition = 1e12;
  double accept_residual = 1e-10;
};

PeriodicOrbit find_periodic(double V, int period, const Point3& guess, const FindOptions& opts = {});

/// rho(x) = (x, x/(2x-1), x), the curve of period-two points.
Point3 period_two_curve(double x);

Matrix3 monodromy_of(const std::vector<Point3>& points);

struct MonodromySpectrum {
  std::complex<double> neutral;
  Eigen::Vector3d neutral_left;       // unit left eigenvector (real part)
  double neutral_alignment = 0.0;     // |<left, grad I>| / |grad I|, 0 at critical points
  bool critical_point = false;        // grad I vanished; neutral chosen as eigenvalue nearest +-1
  std::complex<double> pair[2];
  std::complex<double> pair_product;
  double trace = 0.0;                 // real trace of the surface pair
  double classification_trace = 0.0;  // trace of the pair squared when product is -1
  bool doubled = false;
};

MonodromySpectrum monodromy_spectrum(const PeriodicOrbit& po);
Stability classify_trace(double t, double parabolic_tol = 1e-8);
Stability classify_stability(const PeriodicOrbit& po);

/// Recomputes monodromy, spectrum-derived traces and the stability class.
void analyze(PeriodicOrbit& po);

enum class BranchEventKind { EllipticTransition, PeriodDoubling, Fold, LostConvergence };
std::string_view to_string(BranchEventKind k) noexcept;

struct BranchEvent {
  double V = 0.0;
  BranchEventKind kind = BranchEventKind::EllipticTransition;
  double V_before = 0.0;
  double V_after = 0.0;
  double t_before = 0.0;
  double t_after = 0.0;
  std::optional<PeriodicOrbit> orbit;    // orbit at the located crossing
  std::optional<PeriodicOrbit> doubled;  // period-2p orbit found nearby
};

struct ContinuationBranch {
  std::vector<PeriodicOrbit> orbits;
  std::vector<BranchEvent> events;
  bool lost() const;
};

struct ContinuationOptions {
  double min_step = 1e-6;
  double doubling_offset = 1e-4;
  double crossing_tol = 1e-11;  // V-bisection width at trace crossings
  bool detect_doubling = true;
  FindOptions newton;
};

ContinuationBranch continue_in_V(const PeriodicOrbit& po, double V_target, double max_step,
                                 const ContinuationOptions& opts = {});

/// Seeds from t = (a/q, b/q), polishes on S_0 and continues to V.
PeriodicOrbit seed_from_torus(std::int64_t a, std::int64_t b, std::int64_t q, double V,
                              double max_step = 0.01);
/// Recovers the common denominator of t (up to max_denominator) and delegates.
PeriodicOrbit seed_from_torus(const TorusPoint& t, double V, double max_step = 0.01,
                              std::int64_t max_denominator = 10000);

/// Period of (a/q, b/q) under the cat map.
int anosov_period(std::int64_t a, std::int64_t b, std::int64_t q);

/// Orbits of period 2k (k = 1..max_period/2) symmetric under the reversor sigma:
/// roots of x - z after k steps along the curve {x = z} on S_V.
std::vector<PeriodicOrbit> symmetric_orbits(double V, int max_period, int resolution = 200000);

struct SurveyOptions {
  int grid = 24;  // seeds per axis per sheet
  unsigned workers = 0;
  double dedup_tol = 1e-7;
  int symmetric_resolution = 200000;  // 0 disables the symmetric-line scan
};

/// Distinct periodic orbits of minimal period <= max_period found by Newton
/// from a grid of seeds on both sheets of SS_V.
std::vector<PeriodicOrbit> survey_periodic(double V, int max_period, const SurveyOptions& opts = {});

}  // namespace tracelab
