// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "limbpose/errors.hpp"
#include "limbpose/geometry.hpp"
#include "support.hpp"

namespace limbpose {
namespace {

using testing::box;
using testing::circle;
using testing::near;
using testing::polygon_mask;
using testing::rectangle_example;

TEST(ProjectPoint, Interpolates) {
  const BodyPartMask m = polygon_mask(box(-1, 11, -1, 1), {0, 0}, {10, 0});
  EXPECT_EQ(project_point(m, 0.0), (Point2{0, 0}));
  EXPECT_EQ(project_point(m, 0.3), (Point2{3, 0}));
  EXPECT_EQ(project_point(m, 1.0), (Point2{10, 0}));
  const BodyPartMask diag = polygon_mask(box(0, 8, 0, 10), {2, 1}, {6, 9});
  EXPECT_EQ(project_point(diag, 0.5), (Point2{4, 5}));
  EXPECT_THROW(project_point(m, 1.5), DomainError);
}

TEST(CrossSection, RectangleExample) {
  const CrossSection s = cross_section(rectangle_example(), 0.5);
  EXPECT_TRUE(near(s.projection, {5, 0}, 1e-12));
  EXPECT_TRUE(near(s.side1, {5, 3}, 1e-12));
  EXPECT_TRUE(near(s.side2, {5, -2}, 1e-12));
}

TEST(CrossSection, RectangleRasterMatchesPolygon) {
  Bitmap bm(20, 20);
  for (int r = 3; r < 8; ++r) {
    for (int c = 5; c < 15; ++c) bm.set(r, c);
  }
  const BodyPartMask m{LimbId::kLeftUpperArm, MaskShape{bm}, {5, 5}, {15, 5}};
  const CrossSection s = cross_section(m, 0.5);
  EXPECT_TRUE(near(s.side1, {10, 8}, 1.0 / 64));
  EXPECT_TRUE(near(s.side2, {10, 3}, 1.0 / 64));
}

TEST(CrossSection, Circle) {
  const BodyPartMask m = polygon_mask(circle({0, 0}, 4, 360), {-4, 0}, {4, 0});
  const CrossSection s = cross_section(m, 0.5);
  EXPECT_TRUE(near(s.side1, {0, 4}, 1e-9));
  EXPECT_TRUE(near(s.side2, {0, -4}, 1e-9));

  Bitmap bm(40, 40);
  for (int r = 0; r < 40; ++r) {
    for (int c = 0; c < 40; ++c) {
      if (std::hypot(c + 0.5 - 20, r + 0.5 - 20) <= 8) bm.set(r, c);
    }
  }
  const BodyPartMask rm{LimbKeypointSpec{}.limb, MaskShape{bm}, {12, 20}, {28, 20}};
  const CrossSection rs = cross_section(rm, 0.5);
  EXPECT_TRUE(near(rs.side1, {20, 28}, 1.0));
  EXPECT_TRUE(near(rs.side2, {20, 12}, 1.0));
}

TEST(CrossSection, CrescentHasNoSectionOutside) {
  // C shape opening to the right; the bone midpoint sits in the gap
  const Polygon c{{{0, 0}, {10, 0}, {10, 2}, {2, 2}, {2, 8}, {10, 8}, {10, 10}, {0, 10}}};
  const BodyPartMask m = polygon_mask(c, {1, 5}, {9, 5});
  EXPECT_THROW(cross_section(m, 0.5), NoSection);
  EXPECT_NO_THROW(cross_section(m, 0.0));
}

TEST(CrossSection, NonConvexTakesNearestCrossing) {
  // U shape; the horizontal line y = 8 crosses the boundary at x = 0, 3, 7, 10
  const Polygon u{{{0, 0}, {10, 0}, {10, 10}, {7, 10}, {7, 3}, {3, 3}, {3, 10}, {0, 10}}};
  const BodyPartMask m = polygon_mask(u, {1.5, 8}, {1.5, 2});
  const CrossSection s = cross_section(m, 0.0);
  EXPECT_TRUE(near(s.side1, {3, 8}, 1e-12));
  EXPECT_TRUE(near(s.side2, {0, 8}, 1e-12));
}

TEST(CrossSection, DegenerateOnBoundary) {
  const BodyPartMask m = polygon_mask(box(0, 10, 0, 4), {0, 0}, {10, 0});
  const CrossSection s = cross_section(m, 0.5);
  EXPECT_TRUE(s.degenerate());
  EXPECT_EQ(realize_keypoint(m, {LimbId::kLeftUpperArm, 0.5, 0.0}), (Point2{5, 0}));
  EXPECT_THROW(realize_keypoint(m, {LimbId::kLeftUpperArm, 0.5, 0.5}), DomainError);
}

TEST(RealizeKeypoint, RectangleExamples) {
  const BodyPartMask m = rectangle_example();
  EXPECT_EQ(realize_keypoint(m, {LimbId::kLeftUpperArm, 0.5, 0.0}), (Point2{5, 0}));
  EXPECT_TRUE(near(realize_keypoint(m, {LimbId::kLeftUpperArm, 0.5, 1.0}), {5, 3}, 1e-12));
  EXPECT_TRUE(near(realize_keypoint(m, {LimbId::kLeftUpperArm, 0.5, -0.5}), {5, -1}, 1e-12));
  EXPECT_THROW(realize_keypoint(m, {LimbId::kLeftForearm, 0.5, 0.0}), DomainError);
  EXPECT_THROW(realize_keypoint(m, {LimbId::kLeftUpperArm, 0.5, 1.5}), DomainError);
}

TEST(RealizeKeypoint, InsideAndOnOppositeSides) {
  const Capsule cap{{10, 10}, {30, 22}, 4};
  const BodyPartMask m = polygon_mask(cap.to_polygon(), cap.a, cap.b);
  Rng rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double pb = u(rng);
    const double tau = u(rng);
    const Point2 pos = realize_keypoint(m, {LimbId::kLeftUpperArm, pb, tau});
    const Point2 neg = realize_keypoint(m, {LimbId::kLeftUpperArm, pb, -tau});
    const auto& poly = std::get<Polygon>(m.shape);
    EXPECT_TRUE(poly.contains(pos) || poly.on_boundary(pos, 1e-9));
    EXPECT_TRUE(poly.contains(neg) || poly.on_boundary(neg, 1e-9));
    if (tau > 0) {
      EXPECT_EQ(side_of(cap.a, cap.b, pos), 1);
      EXPECT_EQ(side_of(cap.a, cap.b, neg), -1);
    }
  }
}

TEST(CrossSection, PolygonAndRasterAgree) {
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    const Capsule cap{{5 + 10 * u(rng), 5 + 10 * u(rng)}, {20 + 15 * u(rng), 25 + 10 * u(rng)}, 2 + 3 * u(rng)};
    const Polygon poly = cap.to_polygon();
    // 4 px per unit: raster frame is the polygon frame scaled by 4
    const Bitmap bm = rasterize(poly, 200, 200, 4.0);
    const BodyPartMask pm = polygon_mask(poly, cap.a, cap.b);
    const BodyPartMask rm{LimbId::kLeftUpperArm, MaskShape{bm}, 4.0 * cap.a, 4.0 * cap.b};
    const double pb = u(rng);
    const CrossSection ps = cross_section(pm, pb);
    const CrossSection rs = cross_section(rm, pb);
    EXPECT_TRUE(near(4.0 * ps.side1, rs.side1, 1.0));
    EXPECT_TRUE(near(4.0 * ps.side2, rs.side2, 1.0));
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(Capsule, ClosedFormSection) {
  const Capsule cap{{0, 0}, {10, 0}, 2};
  const CrossSection s = cap.cross_section(0.25);
  EXPECT_EQ(s.side1, (Point2{2.5, 2}));
  EXPECT_EQ(s.side2, (Point2{2.5, -2}));
  const BodyPartMask m = polygon_mask(cap.to_polygon(), cap.a, cap.b);
  const CrossSection ps = cross_section(m, 0.25);
  EXPECT_TRUE(near(ps.side1, s.side1, 1e-6));
  EXPECT_TRUE(near(ps.side2, s.side2, 1e-6));
  EXPECT_GT(cap.to_polygon().signed_area(), 0.0);
}

TEST(SampleKeypoint, Deterministic) {
  const BodyPartMask m = rectangle_example();
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 20; ++i) {
    const SampledKeypoint x = sample_keypoint(m, a);
    const SampledKeypoint y = sample_keypoint(m, b);
    EXPECT_EQ(x.spec, y.spec);
    EXPECT_EQ(x.point, y.point);
  }
}

TEST(SampleKeypoint, ThicknessDistribution) {
  const BodyPartMask m = rectangle_example();
  Rng rng(7);
  constexpr int kN = 100000;
  int zero = 0;
  std::vector<double> pbs;
  pbs.reserve(kN);
  for (int i = 0; i < kN; ++i) {
    const SampledKeypoint s = sample_keypoint(m, rng, 1.0);
    zero += s.spec.signed_thickness == 0.0 ? 1 : 0;
    pbs.push_back(s.spec.line_fraction);
    ASSERT_LE(std::abs(s.spec.signed_thickness), 1.0);
  }
  // 2 (1 - Phi(1))
  EXPECT_NEAR(static_cast<double>(zero) / kN, 0.31731050786291415, 0.01);
  std::sort(pbs.begin(), pbs.end());
  double ks = 0.0;
  for (int i = 0; i < kN; ++i) {
    ks = std::max({ks, std::abs(pbs[i] - static_cast<double>(i) / kN), std::abs(pbs[i] - (i + 1.0) / kN)});
  }
  EXPECT_LT(ks, 0.01);
}

TEST(SampleKeypoint, GivesUpOnHopelessMasks) {
  // projection points never fall inside the mask
  const BodyPartMask m = polygon_mask(box(20, 30, 20, 30), {0, 0}, {10, 0});
  Rng rng(1);
  EXPECT_THROW(sample_keypoint(m, rng), GenerationFailed);
  EXPECT_THROW(sample_keypoint(rectangle_example(), rng, 0.0), DomainError);
}

TEST(ClassifyPrediction, Examples) {
  const BodyPartMask m = rectangle_example();
  const LimbKeypointSpec gt{LimbId::kLeftUpperArm, 0.5, 0.5};
  const SideClassification same = classify_prediction(m, realize_keypoint(m, gt), gt);
  EXPECT_EQ(same.side, SideClass::kSameSide);
  EXPECT_NEAR(same.ratio, 0.5, 1e-12);

  const SideClassification opp = classify_prediction(m, {5, -1}, gt);
  EXPECT_EQ(opp.side, SideClass::kOppositeSide);
  EXPECT_NEAR(opp.ratio, 0.5, 1e-12);

  EXPECT_EQ(classify_prediction(m, {50, 50}, gt).side, SideClass::kUnresolvable);
  // projects beyond the bone
  EXPECT_EQ(classify_prediction(m, {-1, 0.5}, gt).side, SideClass::kUnresolvable);
  // farther than twice the half-span on its own side
  EXPECT_EQ(classify_prediction(m, {5, 6.5}, gt).side, SideClass::kUnresolvable);
  const SideClassification beyond = classify_prediction(m, {5, 4.5}, gt);
  EXPECT_EQ(beyond.side, SideClass::kSameSide);
  EXPECT_NEAR(beyond.ratio, 1.5, 1e-12);
}

TEST(ClassifyPrediction, OnTheBoneTakesTruthSide) {
  const BodyPartMask m = rectangle_example();
  const SideClassification s = classify_prediction(m, {5, 0}, {LimbId::kLeftUpperArm, 0.5, -0.4});
  EXPECT_EQ(s.side, SideClass::kSameSide);
  EXPECT_EQ(s.ratio, 0.0);
}

TEST(SideOf, Convention) {
  EXPECT_EQ(side_of({0, 0}, {10, 0}, {5, 3}), 1);
  EXPECT_EQ(side_of({0, 0}, {10, 0}, {5, -2}), -1);
  EXPECT_EQ(side_of({0, 0}, {10, 0}, {5, 0}), 0);
}

}  // namespace
}  // namespace limbpose
