#include <cmath>

#include <gtest/gtest.h>

#include "tracelab/errors.hpp"
#include "tracelab/horseshoe.hpp"
#include "tracelab/surface.hpp"

using namespace tracelab;

namespace {

AvoidanceSpec spec_with(double eps, int depth) {
  AvoidanceSpec s;
  s.epsilon = eps;
  s.depth = depth;
  return s;
}

// Brute-force survival of one section point on a line whose anchor orbit misses
// every center: expanding iterates 0..depth and contracting iterates 1..depth
// must all stay out of the boxes.
bool brute_survives(const SurvivorSection& sec, double s) {
  const bool stable = sec.direction == LineDirection::Stable;
  auto hit = [&](const TorusPoint& p) {
    for (const auto& c : sec.spec.centers)
      if (torus_distance(p, c) < sec.spec.epsilon) return true;
    return false;
  };
  TorusPoint e = sec.point(s), c = e;
  for (int k = 0; k <= sec.spec.depth; ++k) {
    if (hit(e) || (k > 0 && hit(c))) return false;
    e = stable ? anosov_inverse(e) : anosov_step(e);
    c = stable ? anosov_step(c) : anosov_inverse(c);
  }
  return true;
}

}  // namespace

TEST(Horseshoe, SingularPreimagesMapToSingularities) {
  for (const auto& t : singular_preimages()) {
    const Point3 p = factor_map(t);
    EXPECT_LT(norm(invariant_gradient(p)), 1e-12);
  }
}

TEST(Horseshoe, EigenDirections) {
  const auto s = eigen_direction(LineDirection::Stable), u = eigen_direction(LineDirection::Unstable);
  EXPECT_NEAR(s[0] * u[0] + s[1] * u[1], 0.0, 1e-15);
  // A (x, y) = (x + y, x).
  EXPECT_NEAR(u[0] + u[1], golden * u[0], 1e-14);
  EXPECT_NEAR(s[0] + s[1], -s[0] / golden, 1e-14);
}

TEST(Horseshoe, SpecValidation) {
  EXPECT_THROW(spec_with(0.0, 5).validate(), Error);
  EXPECT_THROW(spec_with(0.5, 5).validate(), Error);
  EXPECT_THROW(spec_with(0.1, 0).validate(), Error);
  AvoidanceSpec none = spec_with(0.1, 3);
  none.centers.clear();
  EXPECT_THROW(none.validate(), Error);
}

TEST(Horseshoe, SurvivorsAgreeWithBruteForce) {
  const TorusPoint anchor(0.2, 0.4);
  const SurvivorSection sec = survivor_section(anchor, LineDirection::Stable, spec_with(0.05, 6));
  int mismatches = 0;
  for (int i = 0; i < 4001; ++i) {
    const double s = -0.5 + i / 4000.0;
    if (sec.survives(s) != brute_survives(sec, s)) ++mismatches;
  }
  EXPECT_LE(mismatches, 2);
}

TEST(Horseshoe, SurvivorNestingInEpsilon) {
  const TorusPoint anchor(0.0, 0.0);
  const SurvivorSection big = survivor_section(anchor, LineDirection::Stable, spec_with(0.04, 10));
  const SurvivorSection small = survivor_section(anchor, LineDirection::Stable, spec_with(0.02, 10));
  for (const auto& iv : big.survivors) {
    bool inside = false;
    for (const auto& jv : small.survivors)
      if (jv.lo <= iv.lo && iv.hi <= jv.hi) inside = true;
    EXPECT_TRUE(inside);
  }
}

TEST(Horseshoe, SurvivorsSymmetricAboutFixedAnchor) {
  const SurvivorSection sec = survivor_section(TorusPoint(0, 0), LineDirection::Stable, spec_with(0.02, 12));
  const auto& v = sec.survivors;
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_NEAR(v[i].lo, -v[v.size() - 1 - i].hi, 1e-12);
  }
}

TEST(Horseshoe, ThicknessGrowsAsEpsilonShrinks) {
  const ThicknessTable t = thickness_vs_epsilon({0.08, 0.04, 0.02}, TorusPoint(0, 0), LineDirection::Stable, 10);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_TRUE(t.nondecreasing);
  EXPECT_GT(t.rows.back().tau, 1.0);
}

TEST(Horseshoe, LargeEpsilonKillsEverything) {
  try {
    survivor_section(TorusPoint(0, 0), LineDirection::Stable, spec_with(0.3, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EverythingDies);
  }
  const ThicknessTable t = thickness_vs_epsilon({0.3, 0.02}, TorusPoint(0, 0), LineDirection::Stable, 6);
  EXPECT_FALSE(t.rows[0].error.empty());
  EXPECT_TRUE(t.rows[1].error.empty());
}

TEST(Horseshoe, DepthWarning) {
  const SurvivorSection sec = survivor_section(TorusPoint(0, 0), LineDirection::Stable, spec_with(0.02, 8));
  EXPECT_GE(sec.gap_mass, sec.previous_gap_mass);
  bool warned = false;
  for (const auto& w : sec.warnings)
    if (w.find("DepthTooShallow") != std::string::npos) warned = true;
  EXPECT_EQ(warned, sec.gap_mass - sec.previous_gap_mass > 0.01 * sec.gap_mass);
}

TEST(Horseshoe, ProjectedSurvivorsOnCubic) {
  const SurvivorSection sec = survivor_section(TorusPoint(0, 0), LineDirection::Stable, spec_with(0.02, 10));
  const ProjectedSurvivors pr = project_survivors(sec, 2000);
  ASSERT_FALSE(pr.points.empty());
  EXPECT_EQ(pr.shift, -10);
  EXPECT_EQ(pr.points.size(), pr.torus.size());
  for (const auto& p : pr.points) {
    EXPECT_NEAR(invariant(p), 0.0, 1e-12);
    for (const auto& q : singular_points()) EXPECT_GT(distance(p, q), pr.pushforward_radius - 1e-12);
  }
  EXPECT_GT(pushforward_radius(singular_preimages(), 0.02), 0.0);
}
