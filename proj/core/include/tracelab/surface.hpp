#pragma once

// Geometry of the level surfaces S_V = {I = V} and of the compact component
// SS_V = S_V cap [-1,1]^3.

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "tracelab/maps.hpp"

namespace tracelab {

enum class SurfaceTopology {
  FourPuncturedSphere,  // V > 0
  CayleyCubic,          // V = 0
  SphereAndFourDiscs,   // -1 < V < 0
  PointAndFourDiscs,    // V = -1
  FourDiscsOnly,        // V < -1
};

std::string_view to_string(SurfaceTopology t) noexcept;

struct SurfaceLevel {
  double V = 0.0;
  SurfaceTopology topology() const;
};

SurfaceTopology classify_level(double V);

/// Real roots z of I(x,y,z) = V, i.e. z = xy +- sqrt((x^2-1)(y^2-1) + V).
/// Roots are sorted ascending; a zero discriminant yields one double root.
struct ZRoots {
  int count = 0;
  std::array<double, 2> z{};

  double lower() const { return z[0]; }
  double upper() const { return z[count - 1]; }
};
ZRoots solve_z(double x, double y, double V);

enum class SamplingMode { Grid, AreaUniform };

struct SampleOptions {
  SamplingMode mode = SamplingMode::Grid;
  std::uint64_t rng_seed = 1;
};

/// At least n points of SS_V covering both z-sheets. V = -1 yields the origin.
std::vector<Point3> sample_compact_component(double V, std::size_t n,
                                             const SampleOptions& opts = {});

/// Moves p along its gradient line onto S_V.
Point3 project_to_level(const Point3& p, double V);

struct TangentFrame {
  Point3 origin;
  Point3 u1;
  Point3 u2;
  Point3 normal;

  /// Chart coordinates of q relative to origin.
  std::array<double, 2> chart(const Point3& q) const {
    const Point3 d = q - origin;
    return {dot(d, u1), dot(d, u2)};
  }
  Point3 lift(double a, double b) const { return origin + u1 * a + u2 * b; }
};

TangentFrame tangent_frame(const Point3& p);

/// Density of the T-invariant leafwise area form against Euclidean area on S_V.
double area_density(const Point3& p);

/// The four conic singularities of the Cayley cubic, P1..P4.
const std::array<Point3, 4>& singular_points();

/// Smallest gradient norm accepted by projections and frames.
inline constexpr double kMinGradient = 1e-8;

}  // namespace tracelab
