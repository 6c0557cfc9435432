#include "tracelab/cantor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_set>

#include <fmt/format.h>

#include "tracelab/errors.hpp"

namespace tracelab {

void CantorPresentation::validate() const {
  if (!(hull.length() > 0.0)) fail(ErrorKind::InvalidArgument, "hull length must be positive");
  std::vector<Interval> sorted = gaps;
  std::sort(sorted.begin(), sorted.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  const bool touching_ok = has_flag("degenerate-interior");
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const Interval& g = sorted[i];
    if (!(g.length() > 0.0)) fail(ErrorKind::InvalidArgument, fmt::format("gap ({}, {}) is empty", g.lo, g.hi));
    const bool inside = touching_ok ? (g.lo >= hull.lo && g.hi <= hull.hi) : (g.lo > hull.lo && g.hi < hull.hi);
    if (!inside) fail(ErrorKind::InvalidArgument, fmt::format("gap ({}, {}) not inside the hull", g.lo, g.hi));
    if (i > 0 && sorted[i - 1].hi > g.lo)
      fail(ErrorKind::InvalidArgument, fmt::format("gaps ({}, {}) and ({}, {}) overlap", sorted[i - 1].lo,
                                                   sorted[i - 1].hi, g.lo, g.hi));
  }
}

std::vector<Interval> CantorPresentation::bridges() const {
  std::vector<Interval> sorted = gaps;
  std::sort(sorted.begin(), sorted.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> out;
  double left = hull.lo;
  for (const auto& g : sorted) {
    if (g.lo >= left) out.push_back({left, g.lo});
    left = std::max(left, g.hi);
  }
  if (hull.hi >= left) out.push_back({left, hull.hi});
  return out;
}

bool CantorPresentation::has_flag(const std::string& f) const {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

void order_by_length(CantorPresentation& c) {
  std::stable_sort(c.gaps.begin(), c.gaps.end(), [](const Interval& a, const Interval& b) {
    if (a.length() != b.length()) return a.length() > b.length();
    return a.lo < b.lo;
  });
}

ThicknessReport thickness_report(const CantorPresentation& c) {
  c.validate();
  if (c.gaps.empty()) return {std::numeric_limits<double>::infinity(), true};
  // Endpoints of gaps removed so far; the bridge at a new gap runs to the
  // nearest removed endpoint (or the hull) on each side.
  std::set<double> right_ends{c.hull.lo};
  std::set<double> left_ends{c.hull.hi};
  double tau = std::numeric_limits<double>::infinity();
  for (const auto& g : c.gaps) {
    const double len = g.length();
    auto r = right_ends.upper_bound(g.lo);
    const double left_bridge = g.lo - *std::prev(r);
    auto l = left_ends.lower_bound(g.hi);
    const double right_bridge = *l - g.hi;
    tau = std::min({tau, left_bridge / len, right_bridge / len});
    right_ends.insert(g.hi);
    left_ends.insert(g.lo);
  }
  return {tau, false};
}

double thickness(const CantorPresentation& c) {
  const ThicknessReport r = thickness_report(c);
  if (r.no_gaps) fail(ErrorKind::NoGaps, "presentation has no gaps; thickness is infinite");
  return r.value;
}

double dim_lower_bound(double tau) {
  if (!(tau > 0.0)) fail(ErrorKind::InvalidArgument, "thickness must be positive");
  if (std::isinf(tau)) return 1.0;
  return std::log(2.0) / std::log(2.0 + 1.0 / tau);
}

namespace {

bool inside_closed(const Interval& a, const Interval& b) { return a.lo >= b.lo && a.hi <= b.hi; }

// Hull of `a` within a gap of `b`, or outside the hull of `b`.
bool separated(const CantorPresentation& a, const CantorPresentation& b) {
  if (a.hull.hi < b.hull.lo || a.hull.lo > b.hull.hi) return true;
  for (const auto& g : b.gaps)
    if (inside_closed(a.hull, g)) return true;
  return false;
}

}  // namespace

GapLemma gap_lemma_predict(const CantorPresentation& c1, const CantorPresentation& c2) {
  GapLemma out;
  out.linked = !separated(c1, c2) && !separated(c2, c1);
  const ThicknessReport t1 = thickness_report(c1), t2 = thickness_report(c2);
  out.tau_product = t1.value * t2.value;
  out.boundary = std::fabs(out.tau_product - 1.0) < 1e-9;
  out.predicted_intersect = out.linked && !out.boundary && out.tau_product > 1.0;
  return out;
}

bool brute_intersect(const CantorPresentation& c1, const CantorPresentation& c2, double resolution) {
  if (!(resolution > 0.0)) fail(ErrorKind::InvalidArgument, "resolution must be positive");
  const auto a = c1.bridges(), b = c2.bridges();
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].lo <= b[j].hi + resolution && b[j].lo <= a[i].hi + resolution) return true;
    if (a[i].hi < b[j].hi) ++i;
    else ++j;
  }
  return false;
}

CantorPresentation presentation_from_samples(std::vector<double> points, double min_gap) {
  if (points.size() < 2) fail(ErrorKind::InvalidArgument, "need at least two samples");
  for (double p : points)
    if (!std::isfinite(p)) fail(ErrorKind::NonFinite, "non-finite sample");
  std::sort(points.begin(), points.end());
  CantorPresentation c;
  c.hull = {points.front(), points.back()};
  if (c.hull.length() < 1e-14) fail(ErrorKind::DegenerateHull, "samples span less than 1e-14");
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i] - points[i - 1] > min_gap) c.gaps.push_back({points[i - 1], points[i]});
  order_by_length(c);
  c.flags.push_back("ordering: decreasing length");
  for (const auto& g : c.gaps)
    if (g.lo <= c.hull.lo || g.hi >= c.hull.hi) {
      c.flags.push_back("degenerate-interior");
      break;
    }
  return c;
}

CantorPresentation middle_alpha_cantor(double alpha, int depth, double lo, double hi) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  const double side = 0.5 * (1.0 - alpha);
  return affine_cantor(side, side, depth, lo, hi);
}

CantorPresentation affine_cantor(double a, double b, int depth, double lo, double hi) {
  if (!(a > 0.0 && b > 0.0 && a + b < 1.0)) fail(ErrorKind::InvalidArgument, "ratios must be positive with a + b < 1");
  if (depth < 0) fail(ErrorKind::InvalidArgument, "depth must be nonnegative");
  if (!(hi > lo)) fail(ErrorKind::InvalidArgument, "empty hull");
  CantorPresentation c;
  c.hull = {lo, hi};
  c.depth = depth;
  std::vector<Interval> level{{lo, hi}};
  for (int d = 0; d < depth; ++d) {
    std::vector<Interval> next;
    next.reserve(level.size() * 2);
    for (const auto& I : level) {
      const double L = I.length();
      const Interval left{I.lo, I.lo + a * L}, right{I.hi - b * L, I.hi};
      c.gaps.push_back({left.hi, right.lo});
      next.push_back(left);
      next.push_back(right);
    }
    level = std::move(next);
  }
  order_by_length(c);
  return c;
}

std::vector<double> endpoint_samples(const CantorPresentation& c) {
  std::vector<double> out;
  for (const auto& b : c.bridges()) {
    out.push_back(b.lo);
    out.push_back(b.hi);
  }
  return out;
}

std::vector<double> geometric_scales(double hi, double lo, int n) {
  if (!(hi > lo && lo > 0.0) || n < 2) fail(ErrorKind::InvalidArgument, "need hi > lo > 0 and n >= 2");
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(hi * std::pow(lo / hi, double(i) / (n - 1)));
  return out;
}

BoxCountReport box_dimension(const std::vector<Point2>& points, std::vector<double> scales) {
  if (points.size() < 100) fail(ErrorKind::InsufficientScales, fmt::format("{} points; need at least 100", points.size()));
  std::sort(scales.begin(), scales.end(), std::greater<>());
  scales.erase(std::unique(scales.begin(), scales.end()), scales.end());
  if (scales.size() < 4) fail(ErrorKind::InsufficientScales, fmt::format("{} distinct scales; need at least 4", scales.size()));
  if (!(scales.back() > 0.0)) fail(ErrorKind::InvalidArgument, "scales must be positive");
  double x0 = points[0][0], y0 = points[0][1];
  for (const auto& p : points) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1])) fail(ErrorKind::NonFinite, "non-finite point");
    x0 = std::min(x0, p[0]);
    y0 = std::min(y0, p[1]);
  }
  BoxCountReport r;
  r.scales = scales;
  for (double eps : scales) {
    std::unordered_set<long long> boxes;
    boxes.reserve(points.size());
    for (const auto& p : points) {
      const long long i = static_cast<long long>((p[0] - x0) / eps);
      const long long j = static_cast<long long>((p[1] - y0) / eps);
      boxes.insert((i << 32) ^ j);
    }
    r.counts.push_back(static_cast<long long>(boxes.size()));
  }
  const std::size_t n = scales.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = std::log(1.0 / scales[k]), y = std::log(double(r.counts[k]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double cov = sxy - sx * sy / n, vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
  r.raw_slope = cov / vx;
  r.r2 = vy > 0.0 ? cov * cov / (vx * vy) : 1.0;
  r.slope = std::clamp(r.raw_slope, 0.0, 2.0);
  return r;
}

}  // namespace tracelab
