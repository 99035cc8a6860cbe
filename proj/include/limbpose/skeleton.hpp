// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "limbpose/limb.hpp"

namespace limbpose {

/// Fixed-keypoint table of a dataset plus the limb-to-endpoint mapping.
struct Skeleton {
  std::string name;
  std::vector<std::string> keypoints;
  /// (endpoint_a, endpoint_b) keypoint indices, indexed by LimbId.
  std::array<std::pair<int, int>, kLimbCount> limbs{};
  /// Torso size for PCK is the distance between these two keypoints
  /// (left shoulder and right hip).
  std::pair<int, int> torso{-1, -1};
  /// Per-keypoint OKS constants k_i; empty when the skeleton has none.
  std::vector<double> oks_constants;

  std::size_t size() const { return keypoints.size(); }
  int index_of(std::string_view keypoint) const;  // -1 when absent
  int require_index(std::string_view keypoint) const;
  std::pair<int, int> endpoints(LimbId limb) const { return limbs[limb_index(limb)]; }

  void validate() const;

  /// 17-keypoint COCO person skeleton with the published OKS constants.
  static Skeleton coco17();
  /// 20-keypoint triple/long-jump skeleton (no OKS constants).
  static Skeleton jump20();

  static Skeleton from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  /// Resolves a built-in name ("coco17", "jump20") or reads a JSON file.
  static Skeleton load(const std::string& name_or_path);
};

}  // namespace limbpose
