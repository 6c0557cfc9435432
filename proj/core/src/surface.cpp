#include "tracelab/surface.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "tracelab/errors.hpp"

namespace tracelab {

std::string_view to_string(SurfaceTopology t) noexcept {
  switch (t) {
    case SurfaceTopology::FourPuncturedSphere: return "FourPuncturedSphere";
    case SurfaceTopology::CayleyCubic: return "CayleyCubic";
    case SurfaceTopology::SphereAndFourDiscs: return "SphereAndFourDiscs";
    case SurfaceTopology::PointAndFourDiscs: return "PointAndFourDiscs";
    case SurfaceTopology::FourDiscsOnly: return "FourDiscsOnly";
  }
  return "Unknown";
}

SurfaceTopology classify_level(double V) {
  if (!std::isfinite(V)) fail(ErrorKind::NonFinite, "level V");
  if (V > 0.0) return SurfaceTopology::FourPuncturedSphere;
  if (V == 0.0) return SurfaceTopology::CayleyCubic;
  if (V > -1.0) return SurfaceTopology::SphereAndFourDiscs;
  if (V == -1.0) return SurfaceTopology::PointAndFourDiscs;
  return SurfaceTopology::FourDiscsOnly;
}

SurfaceTopology SurfaceLevel::topology() const { return classify_level(V); }

ZRoots solve_z(double x, double y, double V) {
  const double disc = (x * x - 1.0) * (y * y - 1.0) + V;
  const double c = x * y;
  ZRoots r;
  if (disc < 0.0) return r;
  if (disc == 0.0) {
    r.count = 1;
    r.z = {c, c};
    return r;
  }
  const double s = std::sqrt(disc);
  r.count = 2;
  r.z = {c - s, c + s};
  return r;
}

namespace {

bool in_cube(double v) { return v >= -1.0 && v <= 1.0; }

// Both sheets over an m x m cell-centred grid of [-1,1]^2.
std::vector<Point3> grid_sample(double V, int m) {
  std::vector<Point3> out;
  const double h = 2.0 / m;
  for (int j = 0; j < m; ++j) {
    const double y = -1.0 + (j + 0.5) * h;
    for (int i = 0; i < m; ++i) {
      const double x = -1.0 + (i + 0.5) * h;
      const ZRoots r = solve_z(x, y, V);
      for (int k = 0; k < r.count; ++k)
        if (in_cube(r.z[k])) out.emplace_back(x, y, r.z[k]);
    }
  }
  return out;
}

}  // namespace

std::vector<Point3> sample_compact_component(double V, std::size_t n, const SampleOptions& opts) {
  if (!std::isfinite(V)) fail(ErrorKind::NonFinite, "level V");
  if (V < -1.0) fail(ErrorKind::EmptyComponent, fmt::format("V = {} has no compact component", V));
  if (V > 0.0) fail(ErrorKind::InvalidArgument, fmt::format("V = {} > 0 has no compact component", V));
  if (n == 0) fail(ErrorKind::InvalidArgument, "n must be positive");
  if (V == -1.0) return {Point3{0.0, 0.0, 0.0}};

  if (opts.mode == SamplingMode::Grid) {
    int m = std::max(2, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)))));
    for (;;) {
      auto pts = grid_sample(V, m);
      if (pts.size() >= n) return pts;
      m = static_cast<int>(std::ceil(m * std::max(1.2, std::sqrt(1.05 * n / std::max<std::size_t>(pts.size(), 1)))));
    }
  }

  // Area-uniform: the invariant area per dx dy is 1/|dI/dz| = 1/(2 sqrt(disc)),
  // so resample a fine grid with those weights (capped near the fold).
  int m = std::max(16, static_cast<int>(std::ceil(2.0 * std::sqrt(static_cast<double>(n)))));
  std::vector<Point3> pool;
  std::vector<double> weight;
  for (;;) {
    pool = grid_sample(V, m);
    if (pool.size() >= 2 * n) break;
    m *= 2;
  }
  weight.reserve(pool.size());
  for (const auto& p : pool) {
    const double dz = std::fabs(2.0 * p.z - 2.0 * p.x * p.y);
    weight.push_back(1.0 / std::max(dz, 2.0 / m));
  }
  std::mt19937_64 rng(opts.rng_seed);
  std::discrete_distribution<std::size_t> pick(weight.begin(), weight.end());
  std::vector<Point3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(pool[pick(rng)]);
  return out;
}

Point3 project_to_level(const Point3& p, double V) {
  double x = p.x, y = p.y, z = p.z;
  if (kernel::invariant(x, y, z) - V == 0.0) return p;
  if (norm(invariant_gradient(p)) <= kMinGradient)
    fail(ErrorKind::SingularGradient,
         fmt::format("gradient vanishes near ({}, {}, {})", p.x, p.y, p.z));
  if (!kernel::project_to_level(x, y, z, V, kMinGradient))
    fail(ErrorKind::NoConvergence, fmt::format("projection of ({}, {}, {}) onto V = {}", p.x, p.y, p.z, V));
  return {x, y, z};
}

TangentFrame tangent_frame(const Point3& p) {
  const Point3 g = invariant_gradient(p);
  const double gn = norm(g);
  if (gn <= kMinGradient)
    fail(ErrorKind::SingularGradient, fmt::format("no tangent frame at ({}, {}, {})", p.x, p.y, p.z));
  const Point3 n = g / gn;
  int axis = 0;
  for (int i = 1; i < 3; ++i)
    if (std::fabs(n[i]) < std::fabs(n[axis])) axis = i;
  Point3 e{axis == 0 ? 1.0 : 0.0, axis == 1 ? 1.0 : 0.0, axis == 2 ? 1.0 : 0.0};
  Point3 u1 = e - n * dot(e, n);
  u1 = u1 / norm(u1);
  Point3 u2 = cross(n, u1);
  u2 = u2 / norm(u2);
  return {p, u1, u2, n};
}

double area_density(const Point3& p) {
  const double gn = norm(invariant_gradient(p));
  if (gn <= kMinGradient)
    fail(ErrorKind::SingularGradient, fmt::format("area density at ({}, {}, {})", p.x, p.y, p.z));
  return 1.0 / gn;
}

const std::array<Point3, 4>& singular_points() {
  static const std::array<Point3, 4> pts{Point3{1.0, 1.0, 1.0}, Point3{-1.0, -1.0, 1.0},
                                         Point3{1.0, -1.0, -1.0}, Point3{-1.0, 1.0, -1.0}};
  return pts;
}

}  // namespace tracelab
