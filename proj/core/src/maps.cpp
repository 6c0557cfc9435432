#include "tracelab/maps.hpp"

#include <fmt/format.h>

#include "tracelab/errors.hpp"

namespace tracelab {

Point3::Point3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
    fail(ErrorKind::NonFinite, fmt::format("point ({}, {}, {})", x, y, z));
}

double reduce_unit(double v) {
  if (!std::isfinite(v)) fail(ErrorKind::NonFinite, "torus coordinate");
  double r = v - std::floor(v);
  if (r >= 1.0 - 1e-15) r = 0.0;
  return r;
}

TorusPoint::TorusPoint(double theta_, double phi_)
    : theta(reduce_unit(theta_)), phi(reduce_unit(phi_)) {}

double torus_distance(const TorusPoint& a, const TorusPoint& b) {
  auto wrap = [](double d) {
    d = std::fabs(d);
    return std::fmin(d, 1.0 - d);
  };
  return std::fmax(wrap(a.theta - b.theta), wrap(a.phi - b.phi));
}

Point3 trace_map(const Point3& p) { return {2.0 * p.x * p.y - p.z, p.x, p.y}; }

Point3 trace_map_inverse(const Point3& p) { return {p.y, p.z, 2.0 * p.y * p.z - p.x}; }

Point3 sigma(const Point3& p) { return {p.z, p.y, p.x}; }

double invariant(const Point3& p) { return kernel::invariant(p.x, p.y, p.z); }

Point3 invariant_gradient(const Point3& p) {
  const auto g = kernel::gradient(p.x, p.y, p.z);
  return {g[0], g[1], g[2]};
}

Matrix3 jacobian(const Point3& p) {
  Matrix3 m;
  m << 2.0 * p.y, 2.0 * p.x, -1.0,
       1.0, 0.0, 0.0,
       0.0, 1.0, 0.0;
  return m;
}

Matrix3 inverse_jacobian(const Point3& p) {
  // T^{-1}(x,y,z) = (y, z, 2yz - x)
  Matrix3 m;
  m << 0.0, 1.0, 0.0,
       0.0, 0.0, 1.0,
       -1.0, 2.0 * p.z, 2.0 * p.y;
  return m;
}

TorusPoint anosov_step(const TorusPoint& t) { return {t.theta + t.phi, t.theta}; }

TorusPoint anosov_inverse(const TorusPoint& t) { return {t.phi, t.theta - t.phi}; }

Point3 factor_map(const TorusPoint& t) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return {std::cos(two_pi * (t.theta + t.phi)), std::cos(two_pi * t.theta),
          std::cos(two_pi * t.phi)};
}

TorusPoint standard_map(const TorusPoint& q, double k) {
  const double kick = k * std::sin(2.0 * std::numbers::pi * q.theta);
  return {q.theta + q.phi + kick, q.phi + kick};
}

Matrix2 standard_map_jacobian(const TorusPoint& q, double k) {
  const double c = 2.0 * std::numbers::pi * k * std::cos(2.0 * std::numbers::pi * q.theta);
  Matrix2 m;
  m << 1.0 + c, 1.0,
       c, 1.0;
  return m;
}

}  // namespace tracelab
