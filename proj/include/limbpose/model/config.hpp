// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

namespace limbpose {

enum class EmbedderKind { kVectorized, kThicknessBaseline, kNormPoseLinear, kNormPoseMlp };

std::string_view embedder_name(EmbedderKind kind);
/// Accepts "vectorized", "thickness-baseline", "normpose-linear", "normpose-mlp".
EmbedderKind embedder_from_name(std::string_view name);

struct ModelConfig {
  int image_height = 64;
  int image_width = 48;
  int patch_height = 4;
  int patch_width = 4;
  int embed_dim = 32;
  int layers = 2;
  int heads = 2;
  double mlp_ratio = 2.0;
  int head_hidden = 256;
  int heatmap_height = 64;
  int heatmap_width = 48;
  double heatmap_sigma = 2.0;
  EmbedderKind embedder = EmbedderKind::kVectorized;
  int num_keypoints = 17;
  std::uint64_t seed = 0;

  int grid_height() const { return image_height / patch_height; }
  int grid_width() const { return image_width / patch_width; }
  int patch_count() const { return grid_height() * grid_width(); }
  int patch_dim() const { return patch_height * patch_width; }
  int ffn_dim() const;
  int cells() const { return heatmap_height * heatmap_width; }
  double stride_x() const { return static_cast<double>(image_width) / heatmap_width; }
  double stride_y() const { return static_cast<double>(image_height) / heatmap_height; }
  bool uses_norm_pose() const {
    return embedder == EmbedderKind::kNormPoseLinear || embedder == EmbedderKind::kNormPoseMlp;
  }
  /// Keypoint tokens appended per requested keypoint.
  int tokens_per_keypoint() const { return embedder == EmbedderKind::kThicknessBaseline ? 2 : 1; }

  /// Throws ConfigError on an inconsistent configuration.
  void validate() const;

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static ModelConfig from_json(const nlohmann::json& j);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace limbpose
