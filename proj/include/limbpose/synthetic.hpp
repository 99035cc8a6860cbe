// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "limbpose/dataset.hpp"
#include "limbpose/image.hpp"
#include "limbpose/skeleton.hpp"

namespace limbpose {

struct SyntheticLimb {
  LimbId limb = LimbId::kLeftUpperArm;
  double half_width = 3.0;
  double intensity = 0.8;
};

/// Fully specified synthetic person: capsule limbs between fixed keypoints
/// drawn over a noisy background with an optional torso quad.
struct SyntheticBodySpec {
  int width = 48;
  int height = 64;
  double background = 0.1;
  double torso_intensity = 0.35;
  double noise = 0.05;
  std::vector<Point2> keypoints;  // one per skeleton keypoint
  std::vector<int> visibility;
  std::vector<SyntheticLimb> limbs;  // 2 to 8, drawn in order
  std::vector<Point2> torso;         // empty for no torso
  std::uint64_t seed = 0;

  Capsule capsule(const SyntheticLimb& limb, const Skeleton& skeleton) const;
  /// Limb count, half-width >= 2 px and capsules inside the image.
  void validate(const Skeleton& skeleton) const;
};

/// Ranges of the random upright body layout, in pixels of a 48x64 frame
/// (scaled to the configured size).
struct SyntheticLayout {
  int width = 48;
  int height = 64;
  double noise = 0.05;
  std::array<double, 4> half_widths = {3.6, 3.0, 4.6, 3.6};  // upper arm, forearm, thigh, lower leg
  double half_width_jitter = 0.15;
};

/// Draws a random body whose eight capsules all lie inside the image.
SyntheticBodySpec random_body_spec(const SyntheticLayout& layout, const Skeleton& skeleton, Rng& rng);

struct SyntheticInstance {
  PoseInstance instance;
  Image image;
  std::vector<Capsule> capsules;  // aligned with instance.masks
};

/// Deterministic rendering; masks are the capsules' polygon outlines.
SyntheticInstance generate_synthetic(const SyntheticBodySpec& spec, const Skeleton& skeleton);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Shuffled partition of [0, count); fractions must be non-negative and sum to 1.
Split split(std::size_t count, const std::array<double, 3>& fractions, std::uint64_t seed);

/// rows x cols specs per limb: p_b = (i + 1) / (rows + 1) and tau evenly
/// spaced over [-1, 1] (tau = 0 for a single column).
std::vector<LimbKeypointSpec> make_eval_grid(std::span<const LimbId> limbs, int rows, int cols);
std::vector<LimbKeypointSpec> make_eval_grid(const PoseInstance& instance, int rows, int cols);

}  // namespace limbpose
