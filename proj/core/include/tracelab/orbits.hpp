#pragma once

// Drift-corrected orbit iteration on SS_V, Lyapunov exponents from tangent
// dynamics, chaos-grid classification and Poincare-section point clouds.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tracelab/maps.hpp"

namespace tracelab {

enum class Direction { Forward, Backward };

struct Orbit {
  double V = 0.0;
  Point3 seed;
  std::vector<Point3> points;  // seed (projected) followed by n iterates
  std::size_t reprojection_interval = 16;
  double max_drift = 0.0;      // largest |I - V| seen just before a reprojection
  bool escaped = false;        // some iterate left [-2,2]^3
};

Orbit iterate(const Point3& seed, double V, std::size_t n, std::size_t reprojection_interval = 16,
              Direction dir = Direction::Forward);

/// Largest Lyapunov exponent of the surface pair along the orbit of seed.
/// Tangent vectors are pushed back into the surface tangent plane each step.
double lyapunov_exponent(const Point3& seed, double V, std::size_t n,
                         Direction dir = Direction::Forward,
                         std::size_t reprojection_interval = 16);

double stdmap_lyapunov(const TorusPoint& q, double k, std::size_t n);

enum class CellClass { Chaotic, Regular, Escaped, OffSurface };
std::string_view to_string(CellClass c) noexcept;

enum class Sheet { Upper, Lower, Both };
std::string_view to_string(Sheet s) noexcept;

enum class SystemKind { TraceMap, StandardMap };

struct ChaosCell {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;                 // unused for the standard map
  double lyapunov = 0.0;          // NaN unless Chaotic or Regular
  CellClass cls = CellClass::OffSurface;
  std::string error;              // set when a cell's computation failed
};

struct ChaosMap {
  SystemKind system = SystemKind::TraceMap;
  double parameter = 0.0;  // V or k
  int res = 0;
  std::size_t n = 0;
  double threshold = 0.01;
  Sheet sheet = Sheet::Upper;
  /// Layer-major (upper sheet first when Both), then row (y index), then column.
  std::vector<ChaosCell> cells;

  int layers() const { return sheet == Sheet::Both ? 2 : 1; }
  const ChaosCell& at(int layer, int row, int col) const {
    return cells[(static_cast<std::size_t>(layer) * res + row) * res + col];
  }
  std::size_t on_surface_count() const;
  std::size_t chaotic_count() const;
  double chaotic_fraction() const;
};

struct ChaosOptions {
  Sheet sheet = Sheet::Upper;
  unsigned workers = 0;  // 0 = default_workers()
  std::size_t reprojection_interval = 16;
};

ChaosMap chaos_grid(double V, int res, std::size_t n, double threshold,
                    const ChaosOptions& opts = {});
ChaosMap stdmap_chaos_grid(double k, int res, std::size_t n, double threshold, unsigned workers = 0);

/// Cell-centred seeds over [-1,1]^2 on the chosen sheet(s), row-major.
std::vector<Point3> grid_seeds(double V, int g, Sheet sheet = Sheet::Upper);

struct CloudPoint {
  std::size_t seed_id = 0;
  std::size_t step = 0;
  Point3 p;
  bool upper_sheet = true;  // z >= xy
};

struct SeedFailure {
  std::size_t seed_id = 0;
  std::string error;
};

struct PoincareCloud {
  double V = 0.0;
  std::size_t n = 0;
  std::vector<CloudPoint> points;
  std::vector<SeedFailure> failures;
  std::string projection = "orthographic-xy";
};

PoincareCloud poincare_cloud(double V, const std::vector<Point3>& seeds, std::size_t n,
                             unsigned workers = 0);

/// Orbit points of every Chaotic cell of a trace-map grid, n steps per cell,
/// in cell order.
std::vector<Point3> chaotic_cloud(const ChaosMap& map, std::size_t n, unsigned workers = 0);

}  // namespace tracelab
