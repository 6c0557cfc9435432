#pragma once

// Exact evaluation of the Fibonacci trace map T(x,y,z) = (2xy - z, x, y), its
// inverse, the Fricke-Vogt invariant, the cat map on the torus with its factor
// map onto the Cayley cubic, and the standard map used as a reference system.

#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Core>

namespace tracelab {

/// A point of R^3. Construction rejects NaN and infinities.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Point3() = default;
  Point3(double x_, double y_, double z_);

  Point3 operator+(const Point3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Point3 operator-(const Point3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Point3 operator-() const { return {-x, -y, -z}; }
  Point3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Point3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Point3& operator+=(const Point3& o) { return *this = *this + o; }
  Point3& operator-=(const Point3& o) { return *this = *this - o; }
  bool operator==(const Point3&) const = default;

  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  Eigen::Vector3d eigen() const { return {x, y, z}; }
  static Point3 from(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }
};

inline Point3 operator*(double s, const Point3& p) { return p * s; }

inline double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Point3 cross(const Point3& a, const Point3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Point3& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Point3& a, const Point3& b) { return norm(a - b); }
inline double max_abs(const Point3& a) {
  return std::fmax(std::fabs(a.x), std::fmax(std::fabs(a.y), std::fabs(a.z)));
}

/// Reduces a real to [0,1). Values within 1e-15 of 1 snap to 0.
double reduce_unit(double v);

/// A point of the 2-torus R^2/Z^2, always stored reduced.
struct TorusPoint {
  double theta = 0.0;
  double phi = 0.0;

  constexpr TorusPoint() = default;
  TorusPoint(double theta_, double phi_);

  bool operator==(const TorusPoint&) const = default;
};

/// Sup-norm distance on the torus.
double torus_distance(const TorusPoint& a, const TorusPoint& b);

using Matrix3 = Eigen::Matrix3d;
using Matrix2 = Eigen::Matrix2d;

inline constexpr double golden = std::numbers::phi;  // (1+sqrt 5)/2

// -- trace map -------------------------------------------------------------

Point3 trace_map(const Point3& p);
/// T^{-1} = sigma o T o sigma with sigma(x,y,z) = (z,y,x).
Point3 trace_map_inverse(const Point3& p);
/// The time-reversal involution sigma.
Point3 sigma(const Point3& p);

/// I(x,y,z) = x^2 + y^2 + z^2 - 2xyz - 1.
double invariant(const Point3& p);
Point3 invariant_gradient(const Point3& p);

/// DT(p); det DT = -1 identically.
Matrix3 jacobian(const Point3& p);
Matrix3 inverse_jacobian(const Point3& p);

// -- torus -----------------------------------------------------------------

/// One step of the cat map (theta, phi) -> (theta + phi, theta).
TorusPoint anosov_step(const TorusPoint& t);
TorusPoint anosov_inverse(const TorusPoint& t);
/// F(theta, phi) = (cos 2pi(theta+phi), cos 2pi theta, cos 2pi phi); F o A = T o F.
Point3 factor_map(const TorusPoint& t);

/// Chirikov standard map in the unit-period normalization.
TorusPoint standard_map(const TorusPoint& q, double k);
Matrix2 standard_map_jacobian(const TorusPoint& q, double k);

namespace kernel {

// Scalar-generic kernels shared by the double and extended-precision paths.

template <class T>
inline void trace_step(T& x, T& y, T& z) {
  const T nx = T(2) * x * y - z;
  z = y;
  y = x;
  x = nx;
}

template <class T>
inline void trace_step_inverse(T& x, T& y, T& z) {
  const T nz = T(2) * y * z - x;
  x = y;
  y = z;
  z = nz;
}

template <class T>
inline T invariant(T x, T y, T z) {
  return x * x + y * y + z * z - T(2) * x * y * z - T(1);
}

template <class T>
inline std::array<T, 3> gradient(T x, T y, T z) {
  return {T(2) * (x - y * z), T(2) * (y - x * z), T(2) * (z - x * y)};
}

/// Moves (x,y,z) along the fixed gradient line through it onto {I = level}.
/// Returns false when the gradient is too small or Newton stalls.
template <class T>
bool project_to_level(T& x, T& y, T& z, T level, T min_gradient = T(1e-8), int max_iter = 50) {
  if (invariant(x, y, z) - level == T(0)) return true;
  const auto g = gradient(x, y, z);
  const T gnorm = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
  if (!(gnorm > min_gradient)) return false;
  T s = 0;
  T px = x, py = y, pz = z;
  for (int it = 0; it < max_iter; ++it) {
    px = x + s * g[0];
    py = y + s * g[1];
    pz = z + s * g[2];
    const T f = invariant(px, py, pz) - level;
    if (std::fabs(f) <= T(1e-16)) break;
    const auto gp = gradient(px, py, pz);
    const T df = gp[0] * g[0] + gp[1] * g[1] + gp[2] * g[2];
    if (df == T(0)) return false;
    const T ds = f / df;
    s -= ds;
    if (std::fabs(ds) * gnorm < T(1e-17)) {
      px = x + s * g[0];
      py = y + s * g[1];
      pz = z + s * g[2];
      break;
    }
  }
  if (!(std::fabs(invariant(px, py, pz) - level) < T(1e-14))) return false;
  x = px;
  y = py;
  z = pz;
  return true;
}

}  // namespace kernel
}  // namespace tracelab
