// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "limbpose/errors.hpp"
#include "limbpose/metrics.hpp"
#include "support.hpp"

namespace limbpose {
namespace {

using testing::rectangle_example;

ThicknessError with_error(double e) {
  ThicknessError t;
  t.error = e;
  return t;
}

TEST(ThicknessError, SideRules) {
  EXPECT_NEAR(thickness_error(0.5, {SideClass::kSameSide, 0.3}).error, 0.2, 1e-15);
  EXPECT_NEAR(thickness_error(0.5, {SideClass::kOppositeSide, 0.3}).error, 0.8, 1e-15);
  EXPECT_EQ(thickness_error(0.5, {SideClass::kUnresolvable, 0.0}).error, 2.0);
  EXPECT_EQ(thickness_error(1.0, {SideClass::kOppositeSide, 1.7}).error, 2.0);
}

TEST(ThicknessError, OnMask) {
  const BodyPartMask m = rectangle_example();
  const LimbKeypointSpec gt{LimbId::kLeftUpperArm, 0.5, 0.5};
  EXPECT_NEAR(thickness_error(m, gt, realize_keypoint(m, gt)).error, 0.0, 1e-12);
  // half-way to side2
  const ThicknessError opp = thickness_error(m, gt, {5, -1});
  EXPECT_EQ(opp.classification, SideClass::kOppositeSide);
  EXPECT_NEAR(opp.error, 1.0, 1e-12);
  EXPECT_NEAR(thickness_error(m, gt, {5, 0.9}).error, 0.2, 1e-12);
  EXPECT_EQ(thickness_error(m, gt, {50, 50}).error, 2.0);
}

TEST(Mte, Mean) {
  const std::vector<ThicknessError> e{with_error(0.2), with_error(0.8), with_error(2.0)};
  EXPECT_DOUBLE_EQ(mte(e), 1.0);
  const std::vector<ThicknessError> z(4, with_error(0.0));
  EXPECT_EQ(mte(z), 0.0);
  const std::vector<ThicknessError> one{with_error(0.37)};
  EXPECT_EQ(mte(one), 0.37);
  EXPECT_THROW(mte(std::vector<ThicknessError>{}), DomainError);
}

TEST(Pct, StrictThreshold) {
  const std::vector<ThicknessError> e{with_error(0.1), with_error(0.19), with_error(0.3)};
  EXPECT_DOUBLE_EQ(pct(e, 0.2), 2.0 / 3.0);
  EXPECT_EQ(pct(std::vector<ThicknessError>{with_error(0.2)}, 0.2), 0.0);
  const std::vector<ThicknessError> unres(3, with_error(2.0));
  EXPECT_EQ(pct(unres, 2.0), 0.0);
  EXPECT_EQ(pct(e, 2.0), 1.0);
  EXPECT_THROW(pct(e, 0.0), DomainError);
  EXPECT_THROW(pct(e, 2.5), DomainError);
  EXPECT_THROW(pct(std::vector<ThicknessError>{}, 0.2), DomainError);
}

TEST(Pck, InclusiveBoundary) {
  const std::vector<Point2> truth{{0, 0}, {50, 50}};
  const std::vector<int> vis{2, 2};
  EXPECT_EQ(pck(truth, truth, vis, 100, 0.1).recall(), 1.0);
  const std::vector<Point2> off10{{10, 0}, {50, 50}};
  EXPECT_EQ(pck(off10, truth, vis, 100, 0.1).correct, 2u);
  const std::vector<Point2> off101{{10.1, 0}, {50, 50}};
  EXPECT_EQ(pck(off101, truth, vis, 100, 0.1).correct, 1u);
  const std::vector<int> hidden{0, 2};
  const PckTally t = pck(off101, truth, hidden, 100, 0.1);
  EXPECT_EQ(t.total, 1u);
  EXPECT_EQ(t.correct, 1u);
  EXPECT_EQ(pck(truth, truth, vis, 0.0, 0.1).skipped_instances, 1u);
}

TEST(Oks, Values) {
  const std::vector<Point2> truth{{10, 10}, {20, 20}};
  const std::vector<double> k{0.05, 0.1};
  const std::vector<int> vis{2, 1};
  EXPECT_DOUBLE_EQ(*oks(truth, truth, vis, 40, k), 1.0);
  // d = s k sqrt(2)
  const double d = 40 * 0.05 * std::sqrt(2.0);
  const std::vector<Point2> pred{{10 + d, 10}, {20, 20}};
  const std::vector<int> first_only{2, 0};
  EXPECT_NEAR(*oks(pred, truth, first_only, 40, k), std::exp(-1.0), 1e-12);
  EXPECT_FALSE(oks(pred, truth, std::vector<int>{0, 0}, 40, k).has_value());
}

TEST(ApAr, Examples) {
  EXPECT_EQ(ap_ar(std::vector<double>{1, 1, 1}, default_oks_thresholds()).ap, 1.0);
  EXPECT_EQ(ap_ar(std::vector<double>{1, 1, 1}, default_oks_thresholds()).ar, 1.0);
  EXPECT_DOUBLE_EQ(ap_ar(std::vector<double>{0.6, 0.6}, std::vector<double>{0.5, 0.75}).ap, 0.5);
  EXPECT_EQ(ap_ar(std::vector<double>{0.49}, default_oks_thresholds()).ap, 0.0);
  EXPECT_THROW(ap_ar(std::vector<double>{}, default_oks_thresholds()), DomainError);
}

EvalSample sample_with(double tau, bool on_projection) {
  const BodyPartMask m = rectangle_example();
  EvalSample s;
  s.fixed_truth = {{0, 0}, {10, 0}};
  s.fixed_predicted = s.fixed_truth;
  s.visibility = {2, 2};
  s.torso_size = 10;
  s.area = 50;
  s.masks = {m};
  for (double pb : {0.2, 0.4, 0.6, 0.8}) {
    const LimbKeypointSpec spec{m.limb, pb, tau};
    const Point2 truth = realize_keypoint(m, spec);
    s.generated.push_back({spec, truth, on_projection ? project_point(m, pb) : truth});
  }
  return s;
}

TEST(Evaluate, GroundTruthIsPerfect) {
  const std::vector<EvalSample> samples{sample_with(0.5, false), sample_with(-0.3, false)};
  EvalConfig cfg;
  cfg.oks_constants = {0.1, 0.1};
  const EvalReport r = evaluate(samples, cfg);
  EXPECT_NEAR(*r.mte, 0.0, 1e-12);
  EXPECT_EQ(r.pct_at.at(0.2), 1.0);
  EXPECT_EQ(r.pck_fixed, 1.0);
  EXPECT_EQ(r.pck_full, 1.0);
  EXPECT_EQ(r.oks_per_instance, (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(r.ap->ap, 1.0);
  EXPECT_EQ(r.counts.same_side, 8u);
}

TEST(Evaluate, ProjectionLinePredictions) {
  // t0 = 0.5 everywhere, tau_pred = 0
  const std::vector<EvalSample> samples{sample_with(0.5, true), sample_with(-0.5, true)};
  const EvalReport r = evaluate(samples, EvalConfig{});
  EXPECT_NEAR(*r.mte, 0.5, 1e-12);
  EXPECT_EQ(r.pct_at.at(0.2), 0.0);
  EXPECT_EQ(r.counts.generated_keypoints, 8u);
  EXPECT_FALSE(r.ap.has_value());
}

TEST(Evaluate, Errors) {
  EXPECT_THROW(evaluate(std::vector<EvalSample>{}, EvalConfig{}), DomainError);
  EvalSample bad = sample_with(0.5, false);
  bad.visibility.pop_back();
  EXPECT_THROW(evaluate(std::vector<EvalSample>{bad}, EvalConfig{}), DomainError);
}

TEST(EvalReport, JsonRoundTrip) {
  const std::vector<EvalSample> samples{sample_with(0.5, true), sample_with(-0.3, false)};
  EvalConfig cfg;
  cfg.pct_thresholds = {0.1, 0.2, 0.5};
  cfg.oks_constants = {0.1, 0.1};
  const EvalReport r = evaluate(samples, cfg);
  const EvalReport back = EvalReport::from_json(nlohmann::json::parse(r.to_json().dump()));
  EXPECT_EQ(back.mte, r.mte);
  EXPECT_EQ(back.pct_at, r.pct_at);
  EXPECT_EQ(back.pck_fixed, r.pck_fixed);
  EXPECT_EQ(back.pck_full, r.pck_full);
  EXPECT_EQ(back.oks_per_instance, r.oks_per_instance);
  EXPECT_EQ(back.ap->ap, r.ap->ap);
  EXPECT_EQ(back.counts, r.counts);
  EXPECT_EQ(back.to_table(), r.to_table());
  EXPECT_NE(r.to_table().find("PCT@0.2"), std::string::npos);
}

}  // namespace
}  // namespace limbpose
