#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "tracelab/errors.hpp"
#include "tracelab/manifolds.hpp"
#include "tracelab/periodic.hpp"
#include "tracelab/surface.hpp"

using namespace tracelab;

namespace {

// Cat-map eigendirections: unstable for golden, stable for -1/golden.
const double kNorm = std::sqrt(1.0 + golden * golden);
const double kUnstable[2] = {golden / kNorm, 1.0 / kNorm};
const double kStable[2] = {1.0 / kNorm, -golden / kNorm};

Point3 line_point(double t0, double p0, const double* v, double s) {
  return factor_map(TorusPoint(t0 + s * v[0], p0 + s * v[1]));
}

// Distance from q to the curve s -> F(t + s v), |s| <= span: dense scan, then golden section.
double curve_distance(const Point3& q, double t0, double p0, const double* v, double span) {
  const int n = 40000;
  double best = std::numeric_limits<double>::infinity(), sb = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double s = -span + 2.0 * span * i / n;
    const double d = distance(q, line_point(t0, p0, v, s));
    if (d < best) {
      best = d;
      sb = s;
    }
  }
  double a = sb - 2.0 * span / n, b = sb + 2.0 * span / n;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 100; ++it) {
    const double c = b - r * (b - a), d = a + r * (b - a);
    if (distance(q, line_point(t0, p0, v, c)) < distance(q, line_point(t0, p0, v, d)))
      b = d;
    else
      a = c;
  }
  return std::min(best, distance(q, line_point(t0, p0, v, 0.5 * (a + b))));
}

PeriodicOrbit cubic_orbit() { return seed_from_torus(1, 2, 5, 0.0); }

}  // namespace

TEST(Manifolds, GeneratorIsExpanding) {
  const PeriodicOrbit po = cubic_orbit();
  for (Side side : {Side::Unstable, Side::Stable}) {
    const ManifoldGenerator g = make_generator(po, side);
    EXPECT_GT(g.mu, 1.0);
    EXPECT_NEAR(norm(g.e), 1.0, 1e-12);
    EXPECT_LT(distance(g.point(0.0), po.points[0]), 2e-6);
  }
}

TEST(Manifolds, PointAtShiftsByOneIterate) {
  const PeriodicOrbit po = cubic_orbit();
  const ManifoldGenerator g = make_generator(po, Side::Unstable);
  for (double s : {0.1, 0.5, 0.9}) {
    Point3 p = g.point_at(s + 2.0, 2);
    Point3 q = g.point_at(s + 1.0, 1);
    for (int i = 0; i < g.m; ++i) q = trace_map(q);
    EXPECT_LT(distance(p, q), 1e-12);
  }
}

TEST(Manifolds, UnstableManifoldOnCubicFollowsEigenline) {
  const PeriodicOrbit po = cubic_orbit();
  ASSERT_LT(distance(po.points[0], factor_map(TorusPoint(0.2, 0.4))), 1e-10);
  for (int branch : {1, -1}) {
    GrowOptions go;
    go.branch = branch;
    const ManifoldArc arc = grow_manifold(po, Side::Unstable, 3.0, 0.01, go);
    ASSERT_GT(arc.vertices.size(), 10u);
    double worst = 0.0;
    for (const auto& v : arc.vertices) worst = std::max(worst, curve_distance(v, 0.2, 0.4, kUnstable, 3.0));
    EXPECT_LT(worst, 1e-7) << "branch " << branch;
  }
}

TEST(Manifolds, StableManifoldOnCubicFollowsEigenline) {
  const PeriodicOrbit po = cubic_orbit();
  const ManifoldArc arc = grow_manifold(po, Side::Stable, 2.0, 0.01);
  double worst = 0.0;
  for (const auto& v : arc.vertices) worst = std::max(worst, curve_distance(v, 0.2, 0.4, kStable, 3.0));
  EXPECT_LT(worst, 1e-7);
}

TEST(Manifolds, GrownArcInvariants) {
  const double V = -0.08;
  const PeriodicOrbit po = find_periodic(V, 2, Point3(-0.7709, 0.3033, -0.7709));
  const ManifoldArc arc = grow_manifold(po, Side::Unstable, 4.0, 0.02);
  ASSERT_EQ(arc.vertices.size(), arc.params.size());
  double len = 0.0;
  for (std::size_t i = 0; i < arc.vertices.size(); ++i) {
    EXPECT_NEAR(invariant(arc.vertices[i]), V, 1e-10);
    if (i) {
      EXPECT_GT(arc.params[i], arc.params[i - 1]);
      len += distance(arc.vertices[i], arc.vertices[i - 1]);
    }
  }
  EXPECT_NEAR(len, arc.arclength, 1e-9);
  EXPECT_NEAR(arc.arclength, 4.0, 1e-6);
  EXPECT_LE(arc.max_turning, 0.02 + 1e-12);
}

TEST(Manifolds, ArcPieceUsesFixedPower) {
  const PeriodicOrbit po = cubic_orbit();
  const ManifoldGenerator g = make_generator(po, Side::Unstable);
  const ManifoldArc piece = arc_piece(g, 2.2, 2.8, 100);
  ASSERT_EQ(piece.params.size(), 101u);
  EXPECT_EQ(piece.power, 2);
  for (std::size_t i = 0; i < piece.params.size(); i += 10)
    EXPECT_LT(distance(piece.vertices[i], g.point_at(piece.params[i], 2)), 1e-15);
}

namespace {

// Closest approach of the forward (or backward) orbit of p to the periodic orbit.
double approach(Point3 p, const PeriodicOrbit& po, bool forward, int steps) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < steps; ++k) {
    p = forward ? trace_map(p) : trace_map_inverse(p);
    for (const auto& q : po.points) best = std::min(best, distance(p, q));
  }
  return best;
}

}  // namespace

TEST(Manifolds, HomoclinicPointsAreAsymptoticBothWays) {
  const double V = -0.08;
  const PeriodicOrbit po = find_periodic(V, 2, Point3(-0.7709, 0.3033, -0.7709));
  const ManifoldArc u = grow_manifold(po, Side::Unstable, 6.0, 0.01);
  const ManifoldArc s = grow_manifold(po, Side::Stable, 6.0, 0.01);
  const auto xs = find_intersections(u, s);
  ASSERT_FALSE(xs.empty());
  for (const auto& x : xs) {
    EXPECT_NEAR(invariant(x.point), V, 1e-10);
    EXPECT_LT(approach(x.point, po, true, 30), 1e-4);
    EXPECT_LT(approach(x.point, po, false, 30), 1e-4);
    EXPECT_GE(x.angle, 0.0);
    EXPECT_LE(x.angle, M_PI / 2 + 1e-12);
  }
}

TEST(Manifolds, ZeroLevelArcsStopAtCubeBoundary) {
  const ManifoldArc u = grow_manifold(cubic_orbit(), Side::Unstable, 12.0, 0.01);
  EXPECT_TRUE(u.truncated);
  EXPECT_LT(u.arclength, 12.0);
  for (const auto& v : u.vertices) EXPECT_LE(std::max({std::fabs(v.x), std::fabs(v.y), std::fabs(v.z)}), 1.0 - 1e-3);
}

TEST(Manifolds, ExtremalSeparationSign) {
  QuadFit s;
  QuadFit u;
  u.a = -1.0;
  u.c = 1.0;
  EXPECT_NEAR(extremal_separation(u, s), 1.0, 1e-15);  // crosses twice
  u.a = 1.0;
  EXPECT_NEAR(extremal_separation(u, s), -1.0, 1e-15);  // misses
  u.c = 0.0;
  EXPECT_TRUE(std::isinf(extremal_separation(u, s)));
}

TEST(Manifolds, TangentGraphIntersectionCheck) {
  QuadFit g, u, v;
  u.a = -0.01;
  u.c = 1.0;
  EXPECT_TRUE(tangent_graph_intersection_check(g, u, v, -0.5, 0.5));
  EXPECT_FALSE(tangent_graph_intersection_check(g, u, v, 0.2, 0.5));
  u.a = 0.01;
  EXPECT_FALSE(tangent_graph_intersection_check(g, u, v, -0.5, 0.5));
  EXPECT_TRUE(tangent_graph_intersection_check(g, u, v, 0.3, 0.3));
}

TEST(Manifolds, HuntRejectsBadRange) {
  EXPECT_THROW(tangency_hunt(-0.01, -0.15, {}), Error);
  EXPECT_THROW(tangency_hunt(-0.2, 0.1, {}), Error);
  HuntOptions ho;
  ho.v_grid = 1;
  EXPECT_THROW(tangency_hunt(-0.15, -0.01, {}, ho), Error);
}

TEST(Manifolds, UnfoldingNeedsPositiveStep) {
  TangencyEvent ev;
  EXPECT_THROW(unfolding_speed(ev, cubic_orbit(), 0.0), Error);
}
