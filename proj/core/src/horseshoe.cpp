#include "tracelab/horseshoe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "tracelab/errors.hpp"

namespace tracelab {

std::vector<TorusPoint> singular_preimages() { return {{0.0, 0.0}, {0.5, 0.0}, {0.0, 0.5}, {0.5, 0.5}}; }

void AvoidanceSpec::validate() const {
  if (!(epsilon > 0.0 && epsilon < 0.5)) fail(ErrorKind::InvalidArgument, fmt::format("epsilon {} outside (0, 1/2)", epsilon));
  if (centers.empty()) fail(ErrorKind::InvalidArgument, "no centers");
  if (depth < 1) fail(ErrorKind::InvalidArgument, "depth must be at least 1");
}

std::string_view to_string(LineDirection d) noexcept { return d == LineDirection::Stable ? "stable" : "unstable"; }

std::array<double, 2> eigen_direction(LineDirection d) {
  const double n = std::sqrt(1.0 + golden * golden);
  if (d == LineDirection::Stable) return {1.0 / n, -golden / n};
  return {golden / n, 1.0 / n};
}

namespace {

struct Line {
  double bx, by;  // base point
  double dx, dy;  // direction scaled by the accumulated multiplier
};

// Cat-map orbit of the anchor and the multiplier of the line direction after k steps.
Line iterate_line(const TorusPoint& anchor, LineDirection dir, int k) {
  TorusPoint b = anchor;
  for (int i = 0; i < std::abs(k); ++i) b = k > 0 ? anosov_step(b) : anosov_inverse(b);
  const double lambda = dir == LineDirection::Stable ? -1.0 / golden : golden;
  const double f = std::pow(lambda, k);
  const auto e = eigen_direction(dir);
  return {b.theta, b.phi, f * e[0], f * e[1]};
}

// Open s-intervals inside (-L, L) where base + s*d comes within eps of c modulo 1.
std::vector<Interval> coordinate_hits(double base, double d, double c, double eps, double L) {
  std::vector<Interval> out;
  if (d == 0.0) {
    const double r = base - c - std::round(base - c);
    if (std::fabs(r) < eps) out.push_back({-L, L});
    return out;
  }
  const double v0 = base - L * std::fabs(d), v1 = base + L * std::fabs(d);
  const long long n0 = static_cast<long long>(std::floor(v0 - c - eps)), n1 = static_cast<long long>(std::ceil(v1 - c + eps));
  for (long long n = n0; n <= n1; ++n) {
    double a = (c + n - eps - base) / d, b = (c + n + eps - base) / d;
    if (a > b) std::swap(a, b);
    a = std::max(a, -L);
    b = std::min(b, L);
    if (a < b) out.push_back({a, b});
  }
  std::sort(out.begin(), out.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  return out;
}

void box_hits(const Line& line, const TorusPoint& c, double eps, double L, std::vector<Interval>& out) {
  const auto xs = coordinate_hits(line.bx, line.dx, c.theta, eps, L);
  const auto ys = coordinate_hits(line.by, line.dy, c.phi, eps, L);
  std::size_t i = 0, j = 0;
  while (i < xs.size() && j < ys.size()) {
    const double lo = std::max(xs[i].lo, ys[j].lo), hi = std::min(xs[i].hi, ys[j].hi);
    if (lo < hi) out.push_back({lo, hi});
    if (xs[i].hi < ys[j].hi) ++i;
    else ++j;
  }
}

bool on_orbit_of(const TorusPoint& c, const TorusPoint& anchor) {
  TorusPoint p = anchor;
  for (int i = 0; i < 10000; ++i) {
    if (torus_distance(p, c) < 1e-12) return true;
    p = anosov_step(p);
    if (torus_distance(p, anchor) < 1e-12) return false;
  }
  return false;
}

// Merged excluded intervals; touching intervals merge so no bridge has zero length.
std::vector<Interval> excluded(const TorusPoint& anchor, LineDirection dir, const AvoidanceSpec& spec, int depth, double L) {
  std::vector<Interval> hits;
  const int expand = dir == LineDirection::Stable ? -1 : 1;
  std::vector<bool> anchor_orbit;
  for (const auto& c : spec.centers) anchor_orbit.push_back(on_orbit_of(c, anchor));
  for (int k = 0; k <= depth; ++k) {
    const Line grow = iterate_line(anchor, dir, expand * k);
    for (const auto& c : spec.centers) box_hits(grow, c, spec.epsilon, L, hits);
    if (k == 0) continue;
    // Contracting iterates collapse onto the anchor orbit, so centers on that
    // orbit would remove every point; only the others are checked there.
    const Line shrink = iterate_line(anchor, dir, -expand * k);
    for (std::size_t ci = 0; ci < spec.centers.size(); ++ci)
      if (!anchor_orbit[ci]) box_hits(shrink, spec.centers[ci], spec.epsilon, L, hits);
  }
  std::sort(hits.begin(), hits.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> merged;
  for (const auto& h : hits) {
    if (!merged.empty() && h.lo <= merged.back().hi) merged.back().hi = std::max(merged.back().hi, h.hi);
    else merged.push_back(h);
  }
  return merged;
}

std::vector<Interval> complement(const std::vector<Interval>& gaps, double L) {
  std::vector<Interval> out;
  double left = -L;
  for (const auto& g : gaps) {
    if (g.lo > left) out.push_back({left, g.lo});
    left = std::max(left, g.hi);
  }
  if (L > left) out.push_back({left, L});
  return out;
}

double inner_mass(const std::vector<Interval>& gaps, const std::vector<Interval>& survivors) {
  if (survivors.empty()) return 0.0;
  const double lo = survivors.front().lo, hi = survivors.back().hi;
  double m = 0.0;
  for (const auto& g : gaps) m += std::max(0.0, std::min(g.hi, hi) - std::max(g.lo, lo));
  return m;
}

}  // namespace

TorusPoint SurvivorSection::point(double s) const {
  const auto e = eigen_direction(direction);
  return {anchor.theta + s * e[0], anchor.phi + s * e[1]};
}

bool SurvivorSection::survives(double s) const {
  auto it = std::upper_bound(survivors.begin(), survivors.end(), s, [](double v, const Interval& I) { return v < I.lo; });
  if (it == survivors.begin()) return false;
  --it;
  return s <= it->hi;
}

SurvivorSection survivor_section(const TorusPoint& anchor, LineDirection direction, const AvoidanceSpec& spec,
                                 double half_length) {
  spec.validate();
  if (!(half_length > 0.0)) fail(ErrorKind::InvalidArgument, "segment half-length must be positive");
  SurvivorSection sec;
  sec.anchor = anchor;
  sec.direction = direction;
  sec.half_length = half_length;
  sec.spec = spec;
  const auto gaps = excluded(anchor, direction, spec, spec.depth, half_length);
  sec.survivors = complement(gaps, half_length);
  if (sec.survivors.empty())
    fail(ErrorKind::EverythingDies, fmt::format("no interval survives at epsilon {} depth {}", spec.epsilon, spec.depth));
  CantorPresentation& c = sec.presentation;
  c.hull = {sec.survivors.front().lo, sec.survivors.back().hi};
  c.depth = spec.depth;
  for (std::size_t i = 1; i < sec.survivors.size(); ++i) c.gaps.push_back({sec.survivors[i - 1].hi, sec.survivors[i].lo});
  order_by_length(c);
  c.flags.push_back("ordering: decreasing length");
  c.flags.push_back("neighborhoods: sup-norm boxes");
  sec.gap_mass = inner_mass(gaps, sec.survivors);
  const auto prev = excluded(anchor, direction, spec, spec.depth - 1, half_length);
  sec.previous_gap_mass = inner_mass(prev, complement(prev, half_length));
  if (sec.gap_mass > 0.0 && std::fabs(sec.gap_mass - sec.previous_gap_mass) > 0.01 * sec.gap_mass)
    sec.warnings.push_back(fmt::format("DepthTooShallow: gap mass {:.6g} at depth {} vs {:.6g} at depth {}", sec.gap_mass,
                                       spec.depth, sec.previous_gap_mass, spec.depth - 1));
  return sec;
}

ThicknessTable thickness_vs_epsilon(const std::vector<double>& eps_list, const TorusPoint& anchor,
                                    LineDirection direction, int depth) {
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1])) fail(ErrorKind::InvalidArgument, "epsilons must be strictly decreasing");
  ThicknessTable table;
  double last = -1.0;
  for (double eps : eps_list) {
    ThicknessRow row;
    row.epsilon = eps;
    try {
      AvoidanceSpec spec;
      spec.epsilon = eps;
      spec.depth = depth;
      const SurvivorSection sec = survivor_section(anchor, direction, spec);
      const ThicknessReport t = thickness_report(sec.presentation);
      row.tau = t.value;
      row.survivors = sec.survivors.size();
      if (row.tau < last) table.nondecreasing = false;
      last = row.tau;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EverythingDies) throw;
      row.error = e.what();
      row.tau = std::nan("");
    }
    table.rows.push_back(row);
  }
  return table;
}

double pushforward_radius(const std::vector<TorusPoint>& centers, double epsilon) {
  constexpr int n = 4096;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : centers) {
    const Point3 P = factor_map(c);
    for (int i = 0; i <= n; ++i) {
      const double u = -epsilon + 2.0 * epsilon * i / n;
      for (const auto& [a, b] : {std::pair{u, -epsilon}, std::pair{u, epsilon}, std::pair{-epsilon, u}, std::pair{epsilon, u}})
        best = std::min(best, distance(factor_map({c.theta + a, c.phi + b}), P));
    }
  }
  return best;
}

ProjectedSurvivors project_survivors(const SurvivorSection& section, std::size_t samples) {
  if (samples < 1) fail(ErrorKind::InvalidArgument, "samples must be positive");
  ProjectedSurvivors out;
  const int depth = section.spec.depth;
  out.shift = section.direction == LineDirection::Stable ? -depth : depth;
  out.pushforward_radius = pushforward_radius(section.spec.centers, section.spec.epsilon);
  const Line moved = iterate_line(section.anchor, section.direction, out.shift);
  const double L = section.half_length;
  for (std::size_t i = 0; i < samples; ++i) {
    const double s = samples == 1 ? 0.0 : -L + 2.0 * L * double(i) / double(samples - 1);
    if (!section.survives(s)) continue;
    const TorusPoint t{moved.bx + s * moved.dx, moved.by + s * moved.dy};
    out.torus.push_back(t);
    out.points.push_back(factor_map(t));
  }
  return out;
}

}  // namespace tracelab
