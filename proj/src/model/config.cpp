// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "limbpose/model/config.hpp"

#include <array>
#include <cmath>

#include "limbpose/errors.hpp"
#include "limbpose/json_util.hpp"

namespace limbpose {

namespace {

constexpr std::array<std::pair<EmbedderKind, std::string_view>, 4> kEmbedderNames = {{
    {EmbedderKind::kVectorized, "vectorized"},
    {EmbedderKind::kThicknessBaseline, "thickness-baseline"},
    {EmbedderKind::kNormPoseLinear, "normpose-linear"},
    {EmbedderKind::kNormPoseMlp, "normpose-mlp"},
}};

void get_pair(const nlohmann::json& j, std::string_view key, int& first, int& second) {
  if (!j.contains(key)) return;
  const auto v = json_get<std::array<int, 2>>(j, key, "model");
  first = v[0];
  second = v[1];
}

}  // namespace

std::string_view embedder_name(EmbedderKind kind) {
  for (const auto& [k, name] : kEmbedderNames) {
    if (k == kind) return name;
  }
  return "?";
}

EmbedderKind embedder_from_name(std::string_view name) {
  for (const auto& [k, n] : kEmbedderNames) {
    if (n == name) return k;
  }
  throw ConfigError("unknown embedder '" + std::string(name) +
                    "' (expected vectorized, thickness-baseline, normpose-linear or normpose-mlp)");
}

int ModelConfig::ffn_dim() const { return static_cast<int>(std::lround(embed_dim * mlp_ratio)); }

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("model: " + msg); };
  if (image_height <= 0 || image_width <= 0 || patch_height <= 0 || patch_width <= 0) fail("sizes must be positive");
  if (image_height % patch_height != 0 || image_width % patch_width != 0) fail("patches must tile the image exactly");
  if (embed_dim <= 0 || embed_dim % 2 != 0) fail("embed_dim must be positive and even");
  if (heads <= 0 || embed_dim % heads != 0) fail("embed_dim must be divisible by heads");
  if (layers < 0) fail("layers must be non-negative");
  if (!(mlp_ratio > 0.0) || ffn_dim() < 1) fail("mlp_ratio must be positive");
  if (head_hidden <= 0) fail("head_hidden must be positive");
  if (heatmap_height < 8 || heatmap_width < 8) fail("heatmaps need at least 8x8 cells");
  if (!(heatmap_sigma > 0.0)) fail("heatmap_sigma must be positive");
  if (num_keypoints <= 0) fail("num_keypoints must be positive");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"image_size", {image_height, image_width}},
          {"patch_size", {patch_height, patch_width}},
          {"embed_dim", embed_dim},
          {"layers", layers},
          {"heads", heads},
          {"mlp_ratio", mlp_ratio},
          {"head_hidden", head_hidden},
          {"heatmap_size", {heatmap_height, heatmap_width}},
          {"heatmap_sigma", heatmap_sigma},
          {"embedder", std::string(embedder_name(embedder))},
          {"num_keypoints", num_keypoints},
          {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"image_size", "patch_size", "embed_dim", "layers", "heads", "mlp_ratio", "head_hidden",
                       "heatmap_size", "heatmap_sigma", "embedder", "num_keypoints", "seed"},
                      "model");
  ModelConfig c;
  get_pair(j, "image_size", c.image_height, c.image_width);
  get_pair(j, "patch_size", c.patch_height, c.patch_width);
  get_pair(j, "heatmap_size", c.heatmap_height, c.heatmap_width);
  c.embed_dim = json_get_or(j, "embed_dim", c.embed_dim, "model");
  c.layers = json_get_or(j, "layers", c.layers, "model");
  c.heads = json_get_or(j, "heads", c.heads, "model");
  c.mlp_ratio = json_get_or(j, "mlp_ratio", c.mlp_ratio, "model");
  c.head_hidden = json_get_or(j, "head_hidden", c.head_hidden, "model");
  c.heatmap_sigma = json_get_or(j, "heatmap_sigma", c.heatmap_sigma, "model");
  if (j.contains("embedder")) c.embedder = embedder_from_name(json_get<std::string>(j, "embedder", "model"));
  c.num_keypoints = json_get_or(j, "num_keypoints", c.num_keypoints, "model");
  c.seed = json_get_or(j, "seed", c.seed, "model");
  c.validate();
  return c;
}

}  // namespace limbpose
