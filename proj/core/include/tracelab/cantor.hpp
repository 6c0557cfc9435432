#pragma once

// Cantor sets given by a hull and an ordered gap list: Newhouse thickness,
// the dimension bound it implies, the gap lemma, and box counting in the plane.

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace tracelab {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

struct CantorPresentation {
  Interval hull;
  std::vector<Interval> gaps;  // the presentation order
  int depth = 0;
  std::vector<std::string> flags;

  /// Throws InvalidArgument unless gaps are disjoint, nonempty and inside the hull.
  void validate() const;
  /// Closed intervals left after removing every gap, left to right.
  std::vector<Interval> bridges() const;
  bool has_flag(const std::string& f) const;
};

/// Reorders gaps by decreasing length (ties left to right).
void order_by_length(CantorPresentation& c);

/// Thickness for the given ordering. Throws NoGaps when there are none.
double thickness(const CantorPresentation& c);

struct ThicknessReport {
  double value = 0.0;  // +inf when there are no gaps
  bool no_gaps = false;
};
ThicknessReport thickness_report(const CantorPresentation& c);

/// log 2 / log(2 + 1/tau).
double dim_lower_bound(double tau);

struct GapLemma {
  bool linked = false;
  double tau_product = 0.0;
  bool predicted_intersect = false;
  bool boundary = false;  // tau product within 1e-9 of 1; prediction withheld
};
GapLemma gap_lemma_predict(const CantorPresentation& c1, const CantorPresentation& c2);

/// Whether the remaining closed intervals of the two sets come within `resolution`.
bool brute_intersect(const CantorPresentation& c1, const CantorPresentation& c2, double resolution);

CantorPresentation presentation_from_samples(std::vector<double> points, double min_gap);

/// Remove the middle alpha fraction `depth` times from [lo, hi].
CantorPresentation middle_alpha_cantor(double alpha, int depth, double lo = 0.0, double hi = 1.0);

/// Two-piece affine Cantor set: each bridge keeps a left piece of ratio a and a
/// right piece of ratio b. Thickness min(a, b) / (1 - a - b).
CantorPresentation affine_cantor(double a, double b, int depth, double lo = 0.0, double hi = 1.0);

/// Endpoints of all bridges, sorted.
std::vector<double> endpoint_samples(const CantorPresentation& c);

struct BoxCountReport {
  std::vector<double> scales;
  std::vector<long long> counts;
  double slope = 0.0;      // clamped to [0, 2]
  double raw_slope = 0.0;
  double r2 = 0.0;
};

using Point2 = std::array<double, 2>;

BoxCountReport box_dimension(const std::vector<Point2>& points, std::vector<double> scales);

/// n scales geometric between hi and lo.
std::vector<double> geometric_scales(double hi, double lo, int n);

}  // namespace tracelab
