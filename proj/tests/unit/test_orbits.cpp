#include <cmath>

#include <gtest/gtest.h>

#include "tracelab/errors.hpp"
#include "tracelab/orbits.hpp"
#include "tracelab/surface.hpp"

using namespace tracelab;

TEST(Orbits, IterateMatchesDirectMap) {
  const Point3 p = project_to_level(Point3(0.3, -0.2, 0.4), -0.5);
  const Orbit o = iterate(p, -0.5, 5, 0);
  ASSERT_EQ(o.points.size(), 6u);
  Point3 q = p;
  for (int i = 1; i <= 5; ++i) {
    q = trace_map(q);
    EXPECT_LT(distance(o.points[i], q), 1e-14);
  }
}

TEST(Orbits, BackwardUndoesForward) {
  const double V = -0.3;
  const Point3 p = project_to_level(Point3(0.1, 0.5, -0.2), V);
  const Orbit f = iterate(p, V, 50, 0);
  const Orbit b = iterate(f.points.back(), V, 50, 0, Direction::Backward);
  EXPECT_LT(distance(b.points.back(), p), 1e-9);
}

TEST(Orbits, ReprojectionHoldsLevel) {
  const double V = -0.5;
  const Point3 p = project_to_level(Point3(0.2, 0.6, -0.1), V);
  const Orbit o = iterate(p, V, 200000, 16);
  double m = 0.0;
  for (const auto& q : o.points) m = std::max(m, std::fabs(invariant(q) - V));
  EXPECT_LT(m, 1e-12);
  EXPECT_FALSE(o.escaped);
}

TEST(Orbits, SeedOffLevelIsRejected) {
  try {
    iterate(Point3(0.9, 0.1, 0.1), -0.5, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
  }
}

TEST(Orbits, LyapunovOnCubicEqualsCatMapEntropy) {
  const Point3 p = factor_map(TorusPoint(0.1234567, 0.3141592));
  EXPECT_NEAR(lyapunov_exponent(p, 0.0, 100000), std::log(golden), 0.01);
}

TEST(Orbits, LyapunovShrinksAsLevelCollapsesToOrigin) {
  double prev = 0.0;
  for (double V : {-0.999, -0.99, -0.95}) {
    const double le = lyapunov_exponent(project_to_level(Point3(0.05, 0.0, 0.0), V), V, 50000);
    EXPECT_GT(le, prev) << V;
    prev = le;
  }
  EXPECT_LT(lyapunov_exponent(project_to_level(Point3(0.01, 0.0, 0.0), -0.999), -0.999, 50000), 0.002);
}

TEST(Orbits, StandardMapLyapunov) {
  EXPECT_LT(stdmap_lyapunov(TorusPoint(0.3, 0.2), 0.0, 10000), 0.005);
  EXPECT_GT(stdmap_lyapunov(TorusPoint(0.3, 0.2), 5.0, 10000), 1.0);
}

TEST(Orbits, ChaosGridLayoutAndCounts) {
  ChaosOptions co;
  co.sheet = Sheet::Both;
  const ChaosMap m = chaos_grid(-0.5, 12, 500, 0.01, co);
  EXPECT_EQ(m.cells.size(), 2u * 12 * 12);
  EXPECT_EQ(m.layers(), 2);
  std::size_t on = 0, chaotic = 0;
  for (const auto& c : m.cells) {
    if (c.cls != CellClass::OffSurface) ++on;
    if (c.cls == CellClass::Chaotic) ++chaotic;
    if (c.cls == CellClass::OffSurface) EXPECT_TRUE(std::isnan(c.lyapunov));
  }
  EXPECT_EQ(on, m.on_surface_count());
  EXPECT_EQ(chaotic, m.chaotic_count());
  EXPECT_GT(on, 0u);
}

TEST(Orbits, ChaosGridIndependentOfWorkers) {
  ChaosOptions one, many;
  one.workers = 1;
  many.workers = 4;
  const ChaosMap a = chaos_grid(-0.4, 10, 300, 0.01, one);
  const ChaosMap b = chaos_grid(-0.4, 10, 300, 0.01, many);
  ASSERT_EQ(a.cells.size(), b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    EXPECT_EQ(a.cells[i].cls, b.cells[i].cls);
    if (!std::isnan(a.cells[i].lyapunov)) EXPECT_EQ(a.cells[i].lyapunov, b.cells[i].lyapunov);
  }
}

TEST(Orbits, ChaosGridRejectsBadLevels) {
  EXPECT_THROW(chaos_grid(0.2, 10, 10, 0.01), Error);
  EXPECT_THROW(chaos_grid(-0.5, 0, 10, 0.01), Error);
  EXPECT_THROW(stdmap_chaos_grid(-1.0, 10, 10, 0.01), Error);
}

TEST(Orbits, IntegrableStandardMapHasNoChaos) {
  EXPECT_EQ(stdmap_chaos_grid(0.0, 20, 1000, 0.01).chaotic_fraction(), 0.0);
}

TEST(Orbits, GridSeedsOnLevel) {
  const auto seeds = grid_seeds(-0.5, 10, Sheet::Both);
  EXPECT_FALSE(seeds.empty());
  for (const auto& s : seeds) EXPECT_NEAR(invariant(s), -0.5, 1e-12);
}

TEST(Orbits, PoincareCloudRecordsFailures) {
  std::vector<Point3> seeds{project_to_level(Point3(0.2, 0.1, 0.3), -0.5), Point3(0.9, 0.9, 0.9)};
  const PoincareCloud c = poincare_cloud(-0.5, seeds, 100);
  EXPECT_EQ(c.points.size(), 101u);
  ASSERT_EQ(c.failures.size(), 1u);
  EXPECT_EQ(c.failures[0].seed_id, 1u);
  EXPECT_EQ(c.projection, "orthographic-xy");
}

TEST(Orbits, ChaoticCloudSize) {
  const ChaosMap m = chaos_grid(-0.2, 8, 300, 0.01);
  const auto cloud = chaotic_cloud(m, 50);
  EXPECT_EQ(cloud.size(), m.chaotic_count() * 51);
}
