// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <span>
#include <variant>
#include <vector>

#include "json.hpp"
#include "limbpose/geometry.hpp"
#include "limbpose/skeleton.hpp"

namespace limbpose {

/// One of the skeleton's predefined keypoints.
struct FixedKeypoint {
  int index = 0;
  friend bool operator==(const FixedKeypoint&, const FixedKeypoint&) = default;
};

/// Anything a model can be asked to locate.
using KeypointSpec = std::variant<FixedKeypoint, LimbKeypointSpec>;

/// (1 - p_b, p_b) mass on the enclosing fixed keypoints plus the 3-entry
/// thickness vector (tau, 1 - tau, 0) or (0, 1 - |tau|, |tau|).
struct VectorizedEncoding {
  std::vector<double> keypoint;
  std::array<double, 3> thickness{};
};

std::array<double, 3> thickness_vector(double signed_thickness);

VectorizedEncoding encode_vectorized(const KeypointSpec& spec, const Skeleton& skeleton);

/// Inverse of encode_vectorized. A single unit entry with thickness (0, 1, 0)
/// is a fixed keypoint; a single unit entry with nonzero thickness is read as
/// an endpoint of the lowest limb starting (p_b = 0) or else ending (p_b = 1)
/// there.
KeypointSpec decode_vectorized(std::span<const double> keypoint, const std::array<double, 3>& thickness,
                               const Skeleton& skeleton);

/// The form decode_vectorized(encode_vectorized(spec)) returns: limb specs
/// sitting on a fixed keypoint with zero thickness become FixedKeypoint, and
/// endpoint specs with thickness are attributed to the decode limb.
KeypointSpec canonicalize(const KeypointSpec& spec, const Skeleton& skeleton);

void validate(const KeypointSpec& spec, const Skeleton& skeleton);

/// Canonical body in normalized [0, 1]^2 coordinates with capsule limbs.
struct NormPoseTemplate {
  std::vector<Point2> keypoints;
  std::array<std::pair<int, int>, kLimbCount> limbs{};
  std::array<double, kLimbCount> half_widths{};

  Capsule capsule(LimbId limb) const;
  void validate() const;

  /// Upright symmetric default for the given built-in skeleton.
  static NormPoseTemplate default_for(const Skeleton& skeleton);
  /// Reads {"keypoints": {name: [u, v]}, "half_widths": {limb: w}}.
  static NormPoseTemplate from_json(const nlohmann::json& j, const Skeleton& skeleton);
  nlohmann::json to_json(const Skeleton& skeleton) const;
};

Point2 encode_norm_pose(const KeypointSpec& spec, const NormPoseTemplate& norm_pose);

/// Recovers the limb spec of a normalized coordinate. Capsules whose straight
/// part holds the point are preferred over end-cap hits; ties go to the lowest
/// limb index. Throws NotOnLimb when no capsule holds it.
LimbKeypointSpec decode_norm_pose(Point2 coord, const NormPoseTemplate& norm_pose);

}  // namespace limbpose
