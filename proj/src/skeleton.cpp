// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "limbpose/skeleton.hpp"

#include <algorithm>
#include <filesystem>

#include "limbpose/errors.hpp"
#include "limbpose/json_util.hpp"

namespace limbpose {

namespace {

constexpr std::array<std::string_view, kLimbCount> kLimbNames = {
    "left_upper_arm",  "left_forearm",  "left_thigh",  "left_lower_leg",
    "right_upper_arm", "right_forearm", "right_thigh", "right_lower_leg",
};

// Standard chain used by both built-in skeletons: (limb, from, to).
struct LimbChain {
  LimbId limb;
  std::string_view from;
  std::string_view to;
};

constexpr std::array<LimbChain, kLimbCount> kDefaultChains = {{
    {LimbId::kLeftUpperArm, "left_shoulder", "left_elbow"},
    {LimbId::kLeftForearm, "left_elbow", "left_wrist"},
    {LimbId::kLeftThigh, "left_hip", "left_knee"},
    {LimbId::kLeftLowerLeg, "left_knee", "left_ankle"},
    {LimbId::kRightUpperArm, "right_shoulder", "right_elbow"},
    {LimbId::kRightForearm, "right_elbow", "right_wrist"},
    {LimbId::kRightThigh, "right_hip", "right_knee"},
    {LimbId::kRightLowerLeg, "right_knee", "right_ankle"},
}};

void assign_default_limbs(Skeleton& s) {
  for (const LimbChain& chain : kDefaultChains) {
    s.limbs[limb_index(chain.limb)] = {s.require_index(chain.from), s.require_index(chain.to)};
  }
  s.torso = {s.require_index("left_shoulder"), s.require_index("right_hip")};
}

}  // namespace

std::string_view limb_name(LimbId id) { return kLimbNames[limb_index(id)]; }

std::optional<LimbId> limb_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kLimbCount; ++i) {
    if (kLimbNames[i] == name) return kAllLimbs[i];
  }
  return std::nullopt;
}

LimbId mirror_limb(LimbId id) {
  const auto i = limb_index(id);
  return kAllLimbs[(i + 4) % kLimbCount];
}

int Skeleton::index_of(std::string_view keypoint) const {
  const auto it = std::find(keypoints.begin(), keypoints.end(), keypoint);
  return it == keypoints.end() ? -1 : static_cast<int>(it - keypoints.begin());
}

int Skeleton::require_index(std::string_view keypoint) const {
  const int i = index_of(keypoint);
  if (i < 0) throw ConfigError("skeleton '" + name + "' has no keypoint '" + std::string(keypoint) + "'");
  return i;
}

void Skeleton::validate() const {
  const int n = static_cast<int>(keypoints.size());
  if (n == 0) throw ConfigError("skeleton '" + name + "' has no keypoints");
  auto valid = [n](int k) { return k >= 0 && k < n; };
  for (std::size_t l = 0; l < kLimbCount; ++l) {
    const auto [a, b] = limbs[l];
    if (!valid(a) || !valid(b) || a == b) {
      throw ConfigError("skeleton '" + name + "': bad endpoints for " + std::string(kLimbNames[l]));
    }
  }
  if (!valid(torso.first) || !valid(torso.second) || torso.first == torso.second) {
    throw ConfigError("skeleton '" + name + "': bad torso pair");
  }
  if (!oks_constants.empty() && oks_constants.size() != keypoints.size()) {
    throw ConfigError("skeleton '" + name + "': oks_constants must have one entry per keypoint");
  }
  for (double k : oks_constants) {
    if (!(k > 0.0)) throw ConfigError("skeleton '" + name + "': OKS constants must be positive");
  }
}

Skeleton Skeleton::coco17() {
  Skeleton s;
  s.name = "coco17";
  s.keypoints = {"nose",        "left_eye",       "right_eye",  "left_ear",    "right_ear",   "left_shoulder",
                 "right_shoulder", "left_elbow",  "right_elbow", "left_wrist", "right_wrist", "left_hip",
                 "right_hip",   "left_knee",      "right_knee", "left_ankle",  "right_ankle"};
  // COCO evaluation sigmas; the OKS constant is k_i = 2 * sigma_i.
  const std::array<double, 17> sigmas = {.26, .25, .25, .35, .35, .79, .79, .72, .72,
                                         .62, .62, 1.07, 1.07, .87, .87, .89, .89};
  for (double sigma : sigmas) s.oks_constants.push_back(2.0 * sigma / 10.0);
  assign_default_limbs(s);
  return s;
}

Skeleton Skeleton::jump20() {
  Skeleton s;
  s.name = "jump20";
  s.keypoints = {"head",           "neck",          "right_shoulder", "right_elbow",     "right_wrist",
                 "left_shoulder",  "left_elbow",    "left_wrist",     "right_hip",       "right_knee",
                 "right_ankle",    "left_hip",      "left_knee",      "left_ankle",      "right_big_toe",
                 "right_small_toe", "right_heel",   "left_big_toe",   "left_small_toe",  "left_heel"};
  assign_default_limbs(s);
  return s;
}

Skeleton Skeleton::from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, {"name", "keypoints", "limbs", "torso", "oks_constants", "norm_pose"}, "skeleton");
  Skeleton s;
  s.name = json_get<std::string>(j, "name", "skeleton");
  s.keypoints = json_get<std::vector<std::string>>(j, "keypoints", "skeleton");
  const auto& limbs = j.at("limbs");
  if (!limbs.is_object()) throw ConfigError("skeleton: 'limbs' must be an object");
  std::array<bool, kLimbCount> seen{};
  for (const auto& [key, value] : limbs.items()) {
    const auto limb = limb_from_name(key);
    if (!limb) throw ConfigError("skeleton: unknown limb '" + key + "'");
    const auto pair = value.get<std::vector<std::string>>();
    if (pair.size() != 2) throw ConfigError("skeleton: limb '" + key + "' needs two keypoint names");
    s.limbs[limb_index(*limb)] = {s.require_index(pair[0]), s.require_index(pair[1])};
    seen[limb_index(*limb)] = true;
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
    throw ConfigError("skeleton: all eight limbs must be defined");
  }
  const auto torso = json_get<std::vector<std::string>>(j, "torso", "skeleton");
  if (torso.size() != 2) throw ConfigError("skeleton: 'torso' needs two keypoint names");
  s.torso = {s.require_index(torso[0]), s.require_index(torso[1])};
  s.oks_constants = json_get_or<std::vector<double>>(j, "oks_constants", {}, "skeleton");
  s.validate();
  return s;
}

nlohmann::json Skeleton::to_json() const {
  nlohmann::json limbs_json = nlohmann::json::object();
  for (LimbId limb : kAllLimbs) {
    const auto [a, b] = endpoints(limb);
    limbs_json[std::string(limb_name(limb))] = {keypoints[a], keypoints[b]};
  }
  nlohmann::json j = {{"name", name},
                      {"keypoints", keypoints},
                      {"limbs", limbs_json},
                      {"torso", {keypoints[torso.first], keypoints[torso.second]}}};
  if (!oks_constants.empty()) j["oks_constants"] = oks_constants;
  return j;
}

Skeleton Skeleton::load(const std::string& name_or_path) {
  if (name_or_path == "coco17") return coco17();
  if (name_or_path == "jump20") return jump20();
  if (!std::filesystem::exists(name_or_path)) {
    throw ConfigError("unknown skeleton '" + name_or_path + "' (not a built-in name or a file)");
  }
  return from_json(read_json_file(name_or_path));
}

}  // namespace limbpose
