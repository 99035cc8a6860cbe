// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "limbpose/errors.hpp"
#include "limbpose/heatmap.hpp"

namespace limbpose {
namespace {

Heatmap render(Point2 target, double sigma = 2.0) { return render_gaussian(target, 48, 64, 4, 4, sigma).heatmap; }

TEST(RenderGaussian, PeakAtCellCenter) {
  const Heatmap hm = render({10 * 4 + 2, 20 * 4 + 2});
  EXPECT_EQ(hm.at(20, 10), 1.0);
  const DecodedPoint d = decode_argmax(hm);
  EXPECT_EQ(d.point, (Point2{42, 82}));
  EXPECT_EQ(d.confidence, 1.0);
  EXPECT_EQ(d.flag, DecodeFlag::kNone);
}

TEST(RenderGaussian, MassMatchesIntegral) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(60.0, 130.0);
  for (int i = 0; i < 20; ++i) {
    const Heatmap hm = render({u(rng) * 0.6, u(rng) * 1.2});
    double sum = 0;
    for (double v : hm.values) sum += v;
    EXPECT_NEAR(sum / (2 * std::numbers::pi * 4.0), 1.0, 0.01);
  }
}

TEST(RenderGaussian, DeterministicAndOutside) {
  EXPECT_EQ(render({33.3, 71.9}), render({33.3, 71.9}));
  const RenderedHeatmap out = render_gaussian({-1, 10}, 48, 64, 4, 4, 2);
  EXPECT_TRUE(out.target_outside);
  for (double v : out.heatmap.values) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(render_gaussian({192, 10}, 48, 64, 4, 4, 2).target_outside);
  EXPECT_THROW(render_gaussian({1, 1}, 48, 64, 4, 4, 0), DomainError);
  EXPECT_THROW(render_gaussian({1, 1}, 4, 64, 4, 4, 2), DomainError);
}

TEST(DecodeArgmax, QuantizationBound) {
  // cell corner: equidistant from four centers
  const DecodedPoint d = decode_argmax(render({40, 80}));
  EXPECT_LE(distance(d.point, {40, 80}), 4 / std::sqrt(2.0) + 1e-12);
}

TEST(DecodeArgmax, TiesAndUniform) {
  Heatmap hm(8, 8, 1, 1);
  hm.at(3, 5) = 1;
  hm.at(2, 6) = 1;
  EXPECT_EQ(decode_argmax(hm).point, (Point2{6.5, 2.5}));
  Heatmap flat(8, 8, 1, 1);
  for (double& v : flat.values) v = 0.3;
  const DecodedPoint d = decode_argmax(flat);
  EXPECT_EQ(d.flag, DecodeFlag::kLowConfidence);
  EXPECT_EQ(d.point, (Point2{0.5, 0.5}));
  EXPECT_EQ(decode_dark(flat).flag, DecodeFlag::kLowConfidence);
}

TEST(DecodeDark, SubPixelRecovery) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ux(20.0, 172.0);
  std::uniform_real_distribution<double> uy(20.0, 236.0);
  double worst = 0;
  for (int i = 0; i < 500; ++i) {
    const Point2 t{ux(rng), uy(rng)};
    const DecodedPoint d = decode_dark(render(t), 2.0);
    ASSERT_EQ(d.flag, DecodeFlag::kNone);
    worst = std::max(worst, distance(d.point, t) / 4.0);
  }
  EXPECT_LT(worst, 0.05);
}

TEST(DecodeDark, NearBorderBeatsArgmax) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(10.0, 36.0);
  for (int i = 0; i < 200; ++i) {
    const Point2 t{u(rng), 256.0 - u(rng)};
    const Heatmap hm = render(t);
    EXPECT_LT(distance(decode_dark(hm).point, t), 0.05) << t.x << "," << t.y;
    EXPECT_LE(distance(decode_dark(hm).point, t), distance(decode_argmax(hm).point, t));
  }
}

TEST(DecodeDark, SymmetricMapHasNoOffset) {
  const Heatmap hm = render({82, 122});
  EXPECT_TRUE(distance(decode_dark(hm).point, decode_argmax(hm).point) < 1e-9);
}

TEST(DecodeDark, BorderFallsBack) {
  const DecodedPoint d = decode_dark(render({2, 2}));
  EXPECT_EQ(d.flag, DecodeFlag::kFallbackArgmax);
  EXPECT_EQ(d.point, (Point2{2, 2}));
}

TEST(DecodeDark, ShiftEquivariance) {
  const Point2 t{61.3, 97.8};
  const Point2 a = decode_dark(render(t)).point;
  const Point2 b = decode_dark(render(t + Point2{4, 0})).point;
  const Point2 c = decode_dark(render(t + Point2{0, 4})).point;
  EXPECT_NEAR(b.x - a.x, 4, 1e-9);
  EXPECT_NEAR(b.y, a.y, 1e-9);
  EXPECT_NEAR(c.y - a.y, 4, 1e-9);
  const Point2 g = decode_argmax(render(t)).point;
  EXPECT_LE(std::abs(a.x - g.x), 2.0);
  EXPECT_LE(std::abs(a.y - g.y), 2.0);
}

TEST(HeatmapDump, RoundTrip) {
  const Heatmap hm = render({51.7, 130.2});
  std::stringstream ss;
  write_heatmap(ss, hm);
  EXPECT_EQ(read_heatmap(ss), hm);
  std::stringstream cut(ss.str().substr(0, 40));
  EXPECT_THROW(read_heatmap(cut), DataError);
  std::stringstream junk("nope");
  EXPECT_THROW(read_heatmap(junk), DataError);
}

}  // namespace
}  // namespace limbpose
