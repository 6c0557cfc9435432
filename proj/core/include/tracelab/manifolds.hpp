#pragma once

// One-dimensional stable and unstable manifolds of hyperbolic periodic points
// on S_V, their intersections, quadratic tangencies and their unfolding in V.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tracelab/maps.hpp"
#include "tracelab/periodic.hpp"

namespace tracelab {

enum class Side { Stable, Unstable };
std::string_view to_string(Side s) noexcept;

enum class Precision { Standard, Extended };
std::string_view to_string(Precision p) noexcept;

/// Exact parametrisation of a manifold branch. With G = T^m (T^-m when stable)
/// and mu > 1 the expanding multiplier of G along e,
///   point(k + s) = G^k(project(q + delta * mu^s * e)),  0 <= s < 1.
struct ManifoldGenerator {
  double V = 0.0;
  Point3 q;          // base periodic point
  Point3 e;          // unit eigenvector, oriented by the branch sign
  double mu = 1.0;   // |eigenvalue| of G along e
  int m = 1;         // map power (period, doubled for negative eigenvalues)
  Side side = Side::Unstable;
  double delta = 1e-6;
  Precision precision = Precision::Standard;

  Point3 point(double sigma) const;
  /// G^k(seed(sigma - k)) for a fixed k. Smooth in sigma, unlike point(), whose
  /// power switches at integers where the linear seed's error shows as a seam.
  Point3 point_at(double sigma, long k) const;
  Point3 seed(double s) const;
  /// Unit tangent by central difference in sigma.
  Point3 tangent(double sigma, double h = 1e-7) const;
};

ManifoldGenerator make_generator(const PeriodicOrbit& po, Side side, int branch = 1, int point_index = 0,
                                 double delta = 1e-6);

struct GrowOptions {
  int branch = 1;                // +1 / -1 along the eigenvector
  int point_index = 0;           // which orbit point owns the arc
  double delta = 1e-6;
  double max_segment = 0.02;     // chord length cap
  double min_dsigma = 1e-13;     // refinement floor in parameter
  std::size_t max_vertices = 2000000;
  Precision precision = Precision::Standard;
};

struct ManifoldArc {
  PeriodicOrbit owner;
  Side side = Side::Unstable;
  ManifoldGenerator gen;
  std::vector<Point3> vertices;
  std::vector<double> params;  // sigma of each vertex, increasing
  double arclength = 0.0;
  double refinement_tol = 0.01;
  double max_turning = 0.0;
  bool truncated = false;      // stopped early near a conic singularity
  std::string diagnostic;
  long power = -1;             // fixed map power for short pieces, -1 for floor(sigma)

  Point3 point(double sigma) const { return power < 0 ? gen.point(sigma) : gen.point_at(sigma, power); }
  /// Central difference in sigma (one-sided at sigma = 0 on full arcs).
  Point3 derivative(double sigma, double h) const;
};

ManifoldArc grow_manifold(const PeriodicOrbit& po, Side side, double target_arclength, double tol,
                          const GrowOptions& opts = {});

/// Grows until the parameter reaches sigma_max instead of a target length.
ManifoldArc grow_manifold_to_sigma(const PeriodicOrbit& po, Side side, double sigma_max, double tol,
                                   const GrowOptions& opts = {});

/// Arc restricted to parameters [s0, s1], resampled with n uniform parameter steps.
ManifoldArc arc_piece(const ManifoldGenerator& gen, double s0, double s1, std::size_t n);

struct Intersection {
  Point3 point;
  double angle = 0.0;  // unsigned angle between the local tangents, in [0, pi/2]
  double param_a = 0.0;
  double param_b = 0.0;
  std::size_t segment_a = 0;
  std::size_t segment_b = 0;
  double chart_error = 0.0;
};

std::vector<Intersection> find_intersections(const ManifoldArc& a, const ManifoldArc& b);

struct QuadFit {
  double a = 0.0, b = 0.0, c = 0.0;  // eta = a + b s + c s^2
  double residual = 0.0;             // max abs residual
  double lo = 0.0, hi = 0.0;         // fitted s-range

  double operator()(double s) const { return a + (b + c * s) * s; }
};

/// Frame at a tangency: origin, common tangent, in-surface normal and surface normal.
struct TangencyFrame {
  Point3 origin, tangent, across, normal;
  double s(const Point3& p) const { return dot(p - origin, tangent); }
  double eta(const Point3& p) const { return dot(p - origin, across); }
};

struct TangencyEvent {
  double V = 0.0;
  Point3 location;
  double param_s = 0.0;  // sigma on the stable arc
  double param_u = 0.0;  // sigma on the unstable arc
  double crossing_angle = 0.0;
  double c_s = 0.0, c_u = 0.0;
  QuadFit fit_s, fit_u;
  double separation = 0.0;       // M: positive when the curves cross twice nearby
  double unfolding_speed = 0.0;  // dM/dV
  double fit_noise = 0.0;        // largest fit residual used
  double window = 0.0;           // half-width of the fitting window in s
  double delta_threshold = 0.05;
  double angle_tol = 1e-3;
  int intersections_below = -1;  // nearby transversal intersections at V - dV
  int intersections_above = -1;  // and at V + dV
  double dV = 0.0;
  TangencyFrame frame;
  ManifoldGenerator gen_s, gen_u;
  int period = 0;
  std::vector<std::string> diagnostics;
};

struct TangencyOptions {
  double angle_tol = 1e-3;
  double Delta = 0.05;
  int window_points = 21;
  double window = 2e-3;          // half-width in frame units
  double max_residual = 1e-8;
  double near_miss = 1e-3;       // separation below which parallel near-misses are examined
};

/// Fits both curves around a common point in a shared frame. Throws PoorFit.
struct PairFit {
  TangencyFrame frame;
  QuadFit s, u;
  double window = 0.0;
  double sigma_s = 0.0, sigma_u = 0.0;
};
PairFit fit_pair(const ManifoldGenerator& gs, double sigma_s, const ManifoldGenerator& gu, double sigma_u,
                 const TangencyOptions& opts, const TangencyFrame* frame = nullptr);

/// Signed extremal separation of two quadratic fits, (B^2 - 4AC) / (4|C|).
double extremal_separation(const QuadFit& u, const QuadFit& s);

std::vector<TangencyEvent> detect_tangencies(const ManifoldArc& ws, const ManifoldArc& wu,
                                             const TangencyOptions& opts = {},
                                             std::vector<std::string>* diagnostics = nullptr);

/// Moves a generator to a nearby level V by re-solving its periodic orbit.
ManifoldGenerator continue_generator(const ManifoldGenerator& gen, const PeriodicOrbit& owner, double V,
                                     Side side, int branch, int point_index, PeriodicOrbit* moved = nullptr);

/// Central difference of M across the event; fills separation counts at V +- dV.
double unfolding_speed(TangencyEvent& event, const PeriodicOrbit& owner, double dV,
                       const TangencyOptions& opts = {}, int branch_s = 1, int branch_u = 1,
                       int point_index = 0);

/// Number of transversal crossings of the two generators' local pieces inside the window.
int count_local_intersections(const ManifoldGenerator& gs, double sigma_s, const ManifoldGenerator& gu,
                              double sigma_u, const TangencyFrame& frame, double window);

struct HuntOptions {
  int max_period = 6;
  int v_grid = 12;
  double arclength = 12.0;
  double refine_tol = 0.02;
  int bisection_steps = 40;
  double dV = 1e-7;
  std::size_t max_events = 1;
  unsigned workers = 0;
  TangencyOptions tangency;
};

struct HuntDiagnostics {
  std::vector<std::string> log;
  std::vector<std::pair<double, double>> min_angle_by_V;
  int brackets = 0;
  int candidates = 0;
  double initial_bracket = 0.0;
  double final_bracket = 0.0;
};

std::vector<TangencyEvent> tangency_hunt(double V_lo, double V_hi, const std::vector<PeriodicOrbit>& seeds,
                                         const HuntOptions& opts = {}, HuntDiagnostics* diag = nullptr);

/// Hyperbolic seeds of period <= max_period at V: symmetric orbits plus a small survey.
std::vector<PeriodicOrbit> default_hunt_seeds(double V, int max_period);

/// Whether the graphs of u and v meet over [alpha, beta].
bool tangent_graph_intersection_check(const QuadFit& g, const QuadFit& u, const QuadFit& v, double alpha,
                                      double beta);

}  // namespace tracelab
