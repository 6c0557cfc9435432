#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "tracelab/errors.hpp"
#include "tracelab/surface.hpp"

using namespace tracelab;

TEST(Surface, Topology) {
  EXPECT_EQ(classify_level(0.3), SurfaceTopology::FourPuncturedSphere);
  EXPECT_EQ(classify_level(0.0), SurfaceTopology::CayleyCubic);
  EXPECT_EQ(classify_level(-0.5), SurfaceTopology::SphereAndFourDiscs);
  EXPECT_EQ(classify_level(-1.0), SurfaceTopology::PointAndFourDiscs);
  EXPECT_EQ(classify_level(-2.0), SurfaceTopology::FourDiscsOnly);
  EXPECT_EQ(SurfaceLevel{-0.2}.topology(), SurfaceTopology::SphereAndFourDiscs);
}

TEST(Surface, SolveZRootsLieOnLevel) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng), y = u(rng), V = -u(rng) * u(rng);
    const ZRoots r = solve_z(x, y, V);
    for (int k = 0; k < r.count; ++k) EXPECT_NEAR(invariant(Point3(x, y, r.z[k])), V, 1e-13);
    if (r.count == 2) EXPECT_LE(r.lower(), r.upper());
  }
  EXPECT_EQ(solve_z(0.0, 0.0, -1.0).count, 1);
  EXPECT_EQ(solve_z(0.0, 0.0, -1.5).count, 0);
}

TEST(Surface, SamplesCoverBothSheets) {
  for (auto mode : {SamplingMode::Grid, SamplingMode::AreaUniform}) {
    SampleOptions so;
    so.mode = mode;
    const auto pts = sample_compact_component(-0.5, 400, so);
    ASSERT_GE(pts.size(), 400u);
    int upper = 0;
    for (const auto& p : pts) {
      EXPECT_NEAR(invariant(p), -0.5, 1e-12);
      EXPECT_LE(max_abs(p), 1.0 + 1e-12);
      if (p.z >= p.x * p.y) ++upper;
    }
    EXPECT_GT(upper, 0);
    EXPECT_LT(upper, static_cast<int>(pts.size()));
  }
}

TEST(Surface, SamplingIsReproducible) {
  SampleOptions so;
  so.mode = SamplingMode::AreaUniform;
  so.rng_seed = 42;
  EXPECT_EQ(sample_compact_component(-0.3, 50, so), sample_compact_component(-0.3, 50, so));
}

TEST(Surface, SamplingEdgeLevels) {
  const auto origin = sample_compact_component(-1.0, 10);
  ASSERT_EQ(origin.size(), 1u);
  EXPECT_EQ(origin.front(), Point3(0, 0, 0));
  EXPECT_THROW(sample_compact_component(-1.5, 10), Error);
  EXPECT_THROW(sample_compact_component(0.5, 10), Error);
  try {
    sample_compact_component(-1.5, 10);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyComponent);
  }
}

TEST(Surface, ProjectionMovesAlongGradient) {
  const Point3 p(0.3, 0.4, 0.5);
  const Point3 q = project_to_level(p, -0.2);
  EXPECT_NEAR(invariant(q), -0.2, 1e-14);
  const Point3 d = q - p;
  EXPECT_LT(norm(cross(d, invariant_gradient(p))), 1e-12);
  EXPECT_THROW(project_to_level(Point3(0, 0, 0), -0.5), Error);
}

TEST(Surface, TangentFrameIsOrthonormal) {
  const Point3 p = project_to_level(Point3(0.2, -0.3, 0.4), -0.4);
  const TangentFrame f = tangent_frame(p);
  EXPECT_NEAR(norm(f.u1), 1.0, 1e-14);
  EXPECT_NEAR(norm(f.u2), 1.0, 1e-14);
  EXPECT_NEAR(dot(f.u1, f.u2), 0.0, 1e-14);
  EXPECT_NEAR(dot(f.u1, invariant_gradient(p)), 0.0, 1e-12);
  const auto c = f.chart(f.lift(0.1, -0.2));
  EXPECT_NEAR(c[0], 0.1, 1e-15);
  EXPECT_NEAR(c[1], -0.2, 1e-15);
}

TEST(Surface, SingularPointsAreCriticalOnCubic) {
  for (const auto& p : singular_points()) {
    EXPECT_NEAR(invariant(p), 0.0, 1e-15);
    EXPECT_LT(norm(invariant_gradient(p)), 1e-15);
    EXPECT_THROW(area_density(p), Error);
  }
}
