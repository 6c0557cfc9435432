#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "tracelab/cantor.hpp"
#include "tracelab/errors.hpp"

using namespace tracelab;

namespace {

// Thickness straight from the definition, by scanning the gaps in the order given
// against every gap that precedes them.
double naive_thickness(const CantorPresentation& c) {
  double tau = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.gaps.size(); ++i) {
    const Interval& u = c.gaps[i];
    double left = u.lo - c.hull.lo, right = c.hull.hi - u.hi;
    for (std::size_t j = 0; j < i; ++j) {
      const Interval& g = c.gaps[j];
      if (g.hi <= u.lo) left = std::min(left, u.lo - g.hi);
      if (g.lo >= u.hi) right = std::min(right, g.lo - u.hi);
    }
    tau = std::min(tau, std::min(left, right) / u.length());
  }
  return tau;
}

}  // namespace

TEST(Cantor, MiddleAlphaThickness) {
  for (double a : {1.0 / 3.0, 0.5, 0.2, 0.7})
    EXPECT_NEAR(thickness(middle_alpha_cantor(a, 6)), (1.0 - a) / (2.0 * a), 1e-9) << a;
}

TEST(Cantor, AffineThickness) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.05, 0.45);
  for (int i = 0; i < 50; ++i) {
    const double a = u(rng), b = u(rng);
    const CantorPresentation c = affine_cantor(a, b, 7, -1.0, 2.0);
    const double tau = std::min(a, b) / (1.0 - a - b);
    EXPECT_NEAR(thickness(c), tau, 1e-6 * tau);
    EXPECT_NEAR(thickness(c), naive_thickness(c), 1e-12 * tau);
  }
}

TEST(Cantor, OrderMatters) {
  CantorPresentation c;
  c.hull = {0.0, 1.0};
  c.gaps = {{0.1, 0.15}, {0.4, 0.6}};
  c.validate();
  const double as_given = thickness(c);
  EXPECT_NEAR(as_given, naive_thickness(c), 1e-15);
  order_by_length(c);
  EXPECT_DOUBLE_EQ(c.gaps.front().lo, 0.4);
  EXPECT_NEAR(thickness(c), naive_thickness(c), 1e-15);
  EXPECT_GE(thickness(c), as_given);
}

TEST(Cantor, NoGaps) {
  CantorPresentation c;
  c.hull = {0.0, 1.0};
  EXPECT_THROW(thickness(c), Error);
  const ThicknessReport r = thickness_report(c);
  EXPECT_TRUE(r.no_gaps);
  EXPECT_TRUE(std::isinf(r.value));
}

TEST(Cantor, ValidateRejectsBadGaps) {
  CantorPresentation c;
  c.hull = {0.0, 1.0};
  c.gaps = {{0.2, 0.5}, {0.4, 0.6}};
  EXPECT_THROW(c.validate(), Error);
  c.gaps = {{0.2, 1.5}};
  EXPECT_THROW(c.validate(), Error);
  c.gaps = {{0.3, 0.3}};
  EXPECT_THROW(c.validate(), Error);
}

TEST(Cantor, Bridges) {
  const CantorPresentation c = middle_alpha_cantor(1.0 / 3.0, 2);
  const auto b = c.bridges();
  ASSERT_EQ(b.size(), 4u);
  EXPECT_NEAR(b[1].lo, 2.0 / 9.0, 1e-15);
  EXPECT_NEAR(b[3].hi, 1.0, 1e-15);
}

TEST(Cantor, DimensionBound) {
  EXPECT_NEAR(dim_lower_bound(1.0), std::log(2.0) / std::log(3.0), 1e-12);
  EXPECT_DOUBLE_EQ(dim_lower_bound(std::numeric_limits<double>::infinity()), 1.0);
  EXPECT_LT(dim_lower_bound(0.5), dim_lower_bound(2.0));
}

TEST(Cantor, GapLemmaPrediction) {
  const CantorPresentation c1 = middle_alpha_cantor(0.2, 6);  // tau 2
  const CantorPresentation c2 = middle_alpha_cantor(0.2, 6, 0.5, 1.7);
  const GapLemma g = gap_lemma_predict(c1, c2);
  EXPECT_TRUE(g.linked);
  EXPECT_NEAR(g.tau_product, 4.0, 1e-9);
  EXPECT_TRUE(g.predicted_intersect);
  EXPECT_TRUE(brute_intersect(c1, c2, 1e-12));

  const CantorPresentation far = middle_alpha_cantor(0.2, 6, 3.0, 4.0);
  EXPECT_FALSE(gap_lemma_predict(c1, far).linked);
  EXPECT_FALSE(brute_intersect(c1, far, 1e-12));

  // A hull inside the central gap is not linked.
  const CantorPresentation inside = middle_alpha_cantor(0.2, 4, 0.45, 0.55);
  EXPECT_FALSE(gap_lemma_predict(c1, inside).linked);
}

TEST(Cantor, GapLemmaBoundaryWithheld) {
  const CantorPresentation c = middle_alpha_cantor(1.0 / 3.0, 6);
  const GapLemma g = gap_lemma_predict(c, middle_alpha_cantor(1.0 / 3.0, 6, 0.3, 1.3));
  EXPECT_TRUE(g.boundary);
  EXPECT_FALSE(g.predicted_intersect);
}

TEST(Cantor, ThinLinkedSetsCanMiss) {
  // Middle-0.9 sets are thin; shifting one by half a gap avoids the other.
  const CantorPresentation c1 = middle_alpha_cantor(0.9, 1);
  const CantorPresentation c2 = middle_alpha_cantor(0.9, 1, 0.06, 1.06);
  EXPECT_TRUE(gap_lemma_predict(c1, c2).linked);
  EXPECT_FALSE(brute_intersect(c1, c2, 1e-12));
}

TEST(Cantor, PresentationFromSamples) {
  const CantorPresentation ref = middle_alpha_cantor(1.0 / 3.0, 5);
  std::vector<double> samples;
  for (const auto& b : ref.bridges())
    for (int i = 0; i <= 10; ++i) samples.push_back(b.lo + b.length() * i / 10.0);
  const CantorPresentation c = presentation_from_samples(samples, ref.bridges()[0].length() / 5.0);
  EXPECT_EQ(c.gaps.size(), ref.gaps.size());
  EXPECT_NEAR(thickness(c), 1.0, 1e-9);
  EXPECT_TRUE(c.has_flag("ordering: decreasing length"));
  EXPECT_THROW(presentation_from_samples({0.5, 0.5}, 1e-6), Error);
}

TEST(Cantor, BoxDimensionOfLineAndSquare) {
  std::vector<Point2> line, square;
  for (int i = 0; i < 20000; ++i) line.push_back({i / 20000.0, 0.3});
  for (int i = 0; i < 300; ++i)
    for (int j = 0; j < 300; ++j) square.push_back({i / 300.0, j / 300.0});
  const auto scales = geometric_scales(0.2, 0.01, 6);
  EXPECT_NEAR(box_dimension(line, scales).slope, 1.0, 0.05);
  EXPECT_NEAR(box_dimension(square, scales).slope, 2.0, 0.05);
  EXPECT_THROW(box_dimension(line, {0.1, 0.1, 0.1, 0.1}), Error);
  EXPECT_THROW(box_dimension({{0.0, 0.0}}, scales), Error);
}

TEST(Cantor, BoxDimensionOfCantorDust) {
  // Product of two middle-thirds sets: dimension 2 log 2 / log 3. Boxes a
  // hair narrower than the bridges keep rounding from splitting a bridge.
  std::vector<double> centres;
  for (const auto& b : middle_alpha_cantor(1.0 / 3.0, 7).bridges()) centres.push_back(0.5 * (b.lo + b.hi));
  std::vector<Point2> dust;
  for (double x : centres)
    for (double y : centres) dust.push_back({x, y});
  const BoxCountReport r = box_dimension(dust, {0.999999 / 9, 0.999999 / 27, 0.999999 / 81, 0.999999 / 243});
  EXPECT_EQ(r.counts.back(), 1024);
  EXPECT_NEAR(r.slope, 2.0 * std::log(2.0) / std::log(3.0), 1e-5);
}
