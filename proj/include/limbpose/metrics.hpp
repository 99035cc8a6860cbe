// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "limbpose/geometry.hpp"

namespace limbpose {

/// Error assigned to a prediction that cannot be placed on the limb.
inline constexpr double kMaxThicknessError = 2.0;

struct ThicknessError {
  double ground_truth_thickness = 0.0;  // t0
  SideClass classification = SideClass::kUnresolvable;
  double predicted_ratio = 0.0;
  double error = kMaxThicknessError;
};

/// Applies the side rules: |t0 - r| on the same side, r + t0 across the bone
/// line, and the maximum for unresolvable predictions. Clamped to [0, 2].
ThicknessError thickness_error(double ground_truth_thickness, const SideClassification& prediction);

/// t0 is measured on the mask (distance of the realized ground-truth point
/// from its projection point over the distance to the boundary on its side).
/// Throws NoSection when the ground truth has no cross-section.
ThicknessError thickness_error(const BodyPartMask& mask, const LimbKeypointSpec& ground_truth, Point2 predicted);

double mte(std::span<const ThicknessError> errors);
/// Fraction of errors strictly below `threshold`, threshold in (0, 2].
double pct(std::span<const ThicknessError> errors, double threshold);

struct PckTally {
  std::size_t correct = 0;
  std::size_t total = 0;
  std::size_t skipped_instances = 0;

  double recall() const;
  PckTally& operator+=(const PckTally& other);
};

/// Counts visible keypoints within threshold * torso_size (inclusive). A
/// non-positive torso size skips the instance.
PckTally pck(std::span<const Point2> predicted, std::span<const Point2> truth, std::span<const int> visibility,
             double torso_size, double threshold);

/// Object keypoint similarity with scale s (s^2 = object area) and constants
/// k_i. Empty when no keypoint is visible.
std::optional<double> oks(std::span<const Point2> predicted, std::span<const Point2> truth,
                          std::span<const int> visibility, double scale, std::span<const double> constants);

struct ApAr {
  double ap = 0.0;
  double ap50 = 0.0;
  double ap75 = 0.0;
  double ar = 0.0;
};

std::vector<double> default_oks_thresholds();

/// Threshold-swept pass rates of ground-truth matched instances.
ApAr ap_ar(std::span<const double> oks_values, std::span<const double> thresholds);

/// One evaluated instance: fixed keypoints plus generated limb keypoints.
struct EvalSample {
  struct Generated {
    LimbKeypointSpec spec;
    Point2 truth;
    Point2 predicted;
  };

  std::vector<Point2> fixed_truth;
  std::vector<Point2> fixed_predicted;
  std::vector<int> visibility;
  double torso_size = 0.0;
  double area = 0.0;
  std::vector<BodyPartMask> masks;  // looked up by limb
  std::vector<Generated> generated;
};

struct EvalConfig {
  std::vector<double> pct_thresholds{0.2};
  double pck_threshold = 0.1;
  std::vector<double> oks_constants;  // empty disables OKS
};

struct EvalCounts {
  std::size_t instances = 0;
  std::size_t fixed_keypoints = 0;
  std::size_t generated_keypoints = 0;
  std::size_t same_side = 0;
  std::size_t opposite_side = 0;
  std::size_t unresolvable = 0;
  std::size_t pck_skipped_instances = 0;
  std::size_t oks_skipped_instances = 0;

  friend bool operator==(const EvalCounts&, const EvalCounts&) = default;
};

struct EvalReport {
  std::optional<double> mte;
  std::map<double, double> pct_at;
  double pck_fixed = 0.0;
  double pck_full = 0.0;
  std::vector<double> oks_per_instance;
  std::optional<ApAr> ap;
  EvalCounts counts;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  /// Aligned plain-text table: Avg PCK, Full PCK, MTE, PCT, AP.
  std::string to_table() const;
};

/// Throws DomainError on an empty sample list or misaligned keypoint arrays.
EvalReport evaluate(std::span<const EvalSample> samples, const EvalConfig& config);

}  // namespace limbpose
