#include "tracelab/orbits.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "tracelab/errors.hpp"
#include "tracelab/parallel.hpp"
#include "tracelab/surface.hpp"

namespace tracelab {

namespace {

constexpr double kSeedTolerance = 1e-6;
constexpr double kEscapeFlagBox = 2.0;
constexpr double kEscapeErrorBox = 10.0;

// Applies T (or T^-1) with periodic reprojection onto S_V.
struct LevelStepper {
  double V;
  std::size_t interval;
  Direction dir;
  std::size_t count = 0;
  double max_drift = 0.0;
  bool escaped = false;

  void step(double& x, double& y, double& z) {
    if (dir == Direction::Forward)
      kernel::trace_step(x, y, z);
    else
      kernel::trace_step_inverse(x, y, z);
    const double m = std::fmax(std::fabs(x), std::fmax(std::fabs(y), std::fabs(z)));
    if (!(m <= kEscapeErrorBox))
      fail(ErrorKind::EscapedDomain, fmt::format("iterate {} left [-10,10]^3", count + 1));
    if (m > kEscapeFlagBox) escaped = true;
    if (interval > 0 && ++count % interval == 0) {
      const double drift = std::fabs(kernel::invariant(x, y, z) - V);
      max_drift = std::fmax(max_drift, drift);
      if (drift != 0.0) {
        const Point3 p = project_to_level(Point3{x, y, z}, V);
        x = p.x;
        y = p.y;
        z = p.z;
      }
    } else if (interval == 0) {
      ++count;
    }
  }
};

Point3 prepare_seed(const Point3& seed, double V) {
  const double off = std::fabs(invariant(seed) - V);
  if (!(off < kSeedTolerance))
    fail(ErrorKind::InvalidArgument,
         fmt::format("seed ({}, {}, {}) is {} away from S_V, V = {}", seed.x, seed.y, seed.z, off, V));
  return project_to_level(seed, V);
}

}  // namespace

Orbit iterate(const Point3& seed, double V, std::size_t n, std::size_t reprojection_interval,
              Direction dir) {
  if (n == 0) fail(ErrorKind::InvalidArgument, "n must be at least 1");
  Orbit orbit;
  orbit.V = V;
  orbit.seed = seed;
  orbit.reprojection_interval = reprojection_interval;
  const Point3 start = prepare_seed(seed, V);
  orbit.points.reserve(n + 1);
  orbit.points.push_back(start);
  LevelStepper stepper{V, reprojection_interval, dir};
  double x = start.x, y = start.y, z = start.z;
  for (std::size_t i = 0; i < n; ++i) {
    stepper.step(x, y, z);
    orbit.points.emplace_back(x, y, z);
  }
  orbit.max_drift = stepper.max_drift;
  orbit.escaped = stepper.escaped;
  return orbit;
}

double lyapunov_exponent(const Point3& seed, double V, std::size_t n, Direction dir,
                         std::size_t reprojection_interval) {
  if (n == 0) fail(ErrorKind::InvalidArgument, "n must be at least 1");
  const Point3 start = prepare_seed(seed, V);
  double x = start.x, y = start.y, z = start.z;

  // Initial tangent vector: first frame axis, or a fixed generic direction at
  // critical points of I where the tangent plane is undefined.
  double vx = 1.0, vy = 0.3, vz = 0.2;
  if (norm(invariant_gradient(start)) > kMinGradient) {
    const TangentFrame f = tangent_frame(start);
    vx = f.u1.x;
    vy = f.u1.y;
    vz = f.u1.z;
  } else {
    const double nv = std::sqrt(vx * vx + vy * vy + vz * vz);
    vx /= nv;
    vy /= nv;
    vz /= nv;
  }

  LevelStepper stepper{V, reprojection_interval, dir};
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double wx, wy, wz;
    if (dir == Direction::Forward) {
      wx = 2.0 * y * vx + 2.0 * x * vy - vz;
      wy = vx;
      wz = vy;
    } else {
      wx = vy;
      wy = vz;
      wz = -vx + 2.0 * z * vy + 2.0 * y * vz;
    }
    stepper.step(x, y, z);
    const auto g = kernel::gradient(x, y, z);
    const double gg = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
    if (gg > kMinGradient * kMinGradient) {
      const double d = (wx * g[0] + wy * g[1] + wz * g[2]) / gg;
      wx -= d * g[0];
      wy -= d * g[1];
      wz -= d * g[2];
    }
    const double nw = std::sqrt(wx * wx + wy * wy + wz * wz);
    if (!(nw > 0.0) || !std::isfinite(nw))
      fail(ErrorKind::NoConvergence, "tangent vector collapsed");
    sum += std::log(nw);
    vx = wx / nw;
    vy = wy / nw;
    vz = wz / nw;
  }
  return sum / static_cast<double>(n);
}

double stdmap_lyapunov(const TorusPoint& q, double k, std::size_t n) {
  if (n == 0) fail(ErrorKind::InvalidArgument, "n must be at least 1");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double x = q.theta, y = q.phi;
  double vx = 1.0, vy = 0.3;
  {
    const double nv = std::hypot(vx, vy);
    vx /= nv;
    vy /= nv;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = two_pi * k * std::cos(two_pi * x);
    const double wx = (1.0 + c) * vx + vy;
    const double wy = c * vx + vy;
    const double kick = k * std::sin(two_pi * x);
    y = reduce_unit(y + kick);
    x = reduce_unit(x + y);
    const double nw = std::hypot(wx, wy);
    sum += std::log(nw);
    vx = wx / nw;
    vy = wy / nw;
  }
  return sum / static_cast<double>(n);
}

std::string_view to_string(CellClass c) noexcept {
  switch (c) {
    case CellClass::Chaotic: return "Chaotic";
    case CellClass::Regular: return "Regular";
    case CellClass::Escaped: return "Escaped";
    case CellClass::OffSurface: return "OffSurface";
  }
  return "Unknown";
}

std::string_view to_string(Sheet s) noexcept {
  switch (s) {
    case Sheet::Upper: return "upper";
    case Sheet::Lower: return "lower";
    case Sheet::Both: return "both";
  }
  return "unknown";
}

std::size_t ChaosMap::on_surface_count() const {
  std::size_t c = 0;
  for (const auto& cell : cells)
    if (cell.cls != CellClass::OffSurface) ++c;
  return c;
}

std::size_t ChaosMap::chaotic_count() const {
  std::size_t c = 0;
  for (const auto& cell : cells)
    if (cell.cls == CellClass::Chaotic) ++c;
  return c;
}

double ChaosMap::chaotic_fraction() const {
  const std::size_t on = on_surface_count();
  return on == 0 ? 0.0 : static_cast<double>(chaotic_count()) / static_cast<double>(on);
}

ChaosMap chaos_grid(double V, int res, std::size_t n, double threshold, const ChaosOptions& opts) {
  if (!(V > -1.0 && V < 0.0))
    fail(ErrorKind::InvalidArgument, fmt::format("chaos grid needs -1 < V < 0, got {}", V));
  if (res < 1) fail(ErrorKind::InvalidArgument, "res must be positive");
  if (n == 0) fail(ErrorKind::InvalidArgument, "n must be positive");

  ChaosMap map;
  map.system = SystemKind::TraceMap;
  map.parameter = V;
  map.res = res;
  map.n = n;
  map.threshold = threshold;
  map.sheet = opts.sheet;
  const int layers = map.layers();
  const std::size_t per_layer = static_cast<std::size_t>(res) * res;
  map.cells.resize(per_layer * layers);

  const double h = 2.0 / res;
  parallel_for(map.cells.size(), opts.workers, [&](std::size_t idx) {
    const int layer = static_cast<int>(idx / per_layer);
    const std::size_t within = idx % per_layer;
    const int row = static_cast<int>(within / res);
    const int col = static_cast<int>(within % res);
    const bool upper = opts.sheet == Sheet::Upper || (opts.sheet == Sheet::Both && layer == 0);
    ChaosCell& cell = map.cells[idx];
    cell.x = -1.0 + (col + 0.5) * h;
    cell.y = -1.0 + (row + 0.5) * h;
    cell.lyapunov = std::numeric_limits<double>::quiet_NaN();
    const ZRoots r = solve_z(cell.x, cell.y, V);
    if (r.count == 0) return;
    cell.z = upper ? r.upper() : r.lower();
    if (cell.z < -1.0 || cell.z > 1.0) return;
    try {
      const double le = lyapunov_exponent(Point3{cell.x, cell.y, cell.z}, V, n, Direction::Forward,
                                          opts.reprojection_interval);
      cell.lyapunov = le;
      cell.cls = le > threshold ? CellClass::Chaotic : CellClass::Regular;
    } catch (const Error& e) {
      cell.cls = CellClass::Escaped;
      cell.error = e.what();
    }
  });
  return map;
}

ChaosMap stdmap_chaos_grid(double k, int res, std::size_t n, double threshold, unsigned workers) {
  if (!(k >= 0.0) || !std::isfinite(k))
    fail(ErrorKind::InvalidArgument, fmt::format("standard map needs k >= 0, got {}", k));
  if (res < 1) fail(ErrorKind::InvalidArgument, "res must be positive");
  if (n == 0) fail(ErrorKind::InvalidArgument, "n must be positive");
  ChaosMap map;
  map.system = SystemKind::StandardMap;
  map.parameter = k;
  map.res = res;
  map.n = n;
  map.threshold = threshold;
  map.cells.resize(static_cast<std::size_t>(res) * res);
  parallel_for(map.cells.size(), workers, [&](std::size_t idx) {
    const int row = static_cast<int>(idx / res);
    const int col = static_cast<int>(idx % res);
    ChaosCell& cell = map.cells[idx];
    cell.x = (col + 0.5) / res;
    cell.y = (row + 0.5) / res;
    cell.lyapunov = stdmap_lyapunov(TorusPoint{cell.x, cell.y}, k, n);
    cell.cls = cell.lyapunov > threshold ? CellClass::Chaotic : CellClass::Regular;
  });
  return map;
}

std::vector<Point3> grid_seeds(double V, int g, Sheet sheet) {
  std::vector<Point3> seeds;
  const double h = 2.0 / g;
  for (int pass = 0; pass < (sheet == Sheet::Both ? 2 : 1); ++pass) {
    const bool upper = sheet == Sheet::Upper || (sheet == Sheet::Both && pass == 0);
    for (int row = 0; row < g; ++row) {
      for (int col = 0; col < g; ++col) {
        const double x = -1.0 + (col + 0.5) * h;
        const double y = -1.0 + (row + 0.5) * h;
        const ZRoots r = solve_z(x, y, V);
        if (r.count == 0) continue;
        const double z = upper ? r.upper() : r.lower();
        if (z < -1.0 || z > 1.0) continue;
        seeds.emplace_back(x, y, z);
      }
    }
  }
  return seeds;
}

PoincareCloud poincare_cloud(double V, const std::vector<Point3>& seeds, std::size_t n,
                             unsigned workers) {
  if (!(V >= -1.0 && V <= 0.0))
    fail(ErrorKind::InvalidArgument, fmt::format("Poincare cloud needs -1 <= V <= 0, got {}", V));
  PoincareCloud cloud;
  cloud.V = V;
  cloud.n = n;
  std::vector<std::vector<CloudPoint>> per_seed(seeds.size());
  std::vector<std::string> errors(seeds.size());
  parallel_for(seeds.size(), workers, [&](std::size_t s) {
    try {
      const Orbit orbit = iterate(seeds[s], V, n);
      auto& out = per_seed[s];
      out.reserve(orbit.points.size());
      for (std::size_t i = 0; i < orbit.points.size(); ++i) {
        const Point3& p = orbit.points[i];
        out.push_back({s, i, p, p.z >= p.x * p.y});
      }
    } catch (const Error& e) {
      errors[s] = e.what();
    }
  });
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    cloud.points.insert(cloud.points.end(), per_seed[s].begin(), per_seed[s].end());
    if (!errors[s].empty()) cloud.failures.push_back({s, errors[s]});
  }
  return cloud;
}

std::vector<Point3> chaotic_cloud(const ChaosMap& map, std::size_t n, unsigned workers) {
  if (map.system != SystemKind::TraceMap) fail(ErrorKind::InvalidArgument, "chaotic cloud needs a trace-map grid");
  std::vector<const ChaosCell*> cells;
  for (const auto& c : map.cells)
    if (c.cls == CellClass::Chaotic) cells.push_back(&c);
  std::vector<std::vector<Point3>> parts(cells.size());
  parallel_for(cells.size(), workers, [&](std::size_t i) {
    try {
      parts[i] = iterate(Point3{cells[i]->x, cells[i]->y, cells[i]->z}, map.parameter, n).points;
    } catch (const Error&) {
    }
  });
  std::vector<Point3> out;
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace tracelab
