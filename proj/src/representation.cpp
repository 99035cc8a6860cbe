// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "limbpose/representation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>

#include "limbpose/errors.hpp"
#include "limbpose/json_util.hpp"

namespace limbpose {

namespace {

constexpr double kSumTolerance = 1e-9;

void require_index(int index, const Skeleton& skeleton) {
  if (index < 0 || index >= static_cast<int>(skeleton.size())) {
    throw DomainError("fixed keypoint index " + std::to_string(index) + " outside skeleton '" + skeleton.name + "'");
  }
}

// Limb used to express an endpoint-sited keypoint with thickness.
LimbKeypointSpec endpoint_limb(int keypoint, double tau, const Skeleton& skeleton) {
  for (LimbId limb : kAllLimbs) {
    if (skeleton.endpoints(limb).first == keypoint) return {limb, 0.0, tau};
  }
  for (LimbId limb : kAllLimbs) {
    if (skeleton.endpoints(limb).second == keypoint) return {limb, 1.0, tau};
  }
  throw DomainError("keypoint '" + skeleton.keypoints[keypoint] + "' with thickness belongs to no limb");
}

const std::map<std::string, Point2, std::less<>>& default_coordinates() {
  static const std::map<std::string, Point2, std::less<>> coords = {
      {"nose", {0.50, 0.12}},          {"left_eye", {0.53, 0.10}},       {"right_eye", {0.47, 0.10}},
      {"left_ear", {0.56, 0.11}},      {"right_ear", {0.44, 0.11}},      {"head", {0.50, 0.10}},
      {"neck", {0.50, 0.22}},          {"left_shoulder", {0.65, 0.30}},  {"right_shoulder", {0.35, 0.30}},
      {"left_elbow", {0.70, 0.45}},    {"right_elbow", {0.30, 0.45}},    {"left_wrist", {0.75, 0.60}},
      {"right_wrist", {0.25, 0.60}},   {"left_hip", {0.60, 0.55}},       {"right_hip", {0.40, 0.55}},
      {"left_knee", {0.62, 0.72}},     {"right_knee", {0.38, 0.72}},     {"left_ankle", {0.64, 0.89}},
      {"right_ankle", {0.36, 0.89}},   {"left_big_toe", {0.67, 0.95}},   {"right_big_toe", {0.33, 0.95}},
      {"left_small_toe", {0.70, 0.94}}, {"right_small_toe", {0.30, 0.94}}, {"left_heel", {0.63, 0.93}},
      {"right_heel", {0.37, 0.93}},
  };
  return coords;
}

constexpr std::array<double, 4> kDefaultHalfWidths = {0.045, 0.035, 0.06, 0.045};

}  // namespace

std::array<double, 3> thickness_vector(double tau) {
  if (tau >= 0.0) return {tau, 1.0 - tau, 0.0};
  return {0.0, 1.0 + tau, -tau};
}

void validate(const KeypointSpec& spec, const Skeleton& skeleton) {
  if (const auto* fixed = std::get_if<FixedKeypoint>(&spec)) {
    require_index(fixed->index, skeleton);
  } else {
    std::get<LimbKeypointSpec>(spec).validate();
  }
}

VectorizedEncoding encode_vectorized(const KeypointSpec& spec, const Skeleton& skeleton) {
  validate(spec, skeleton);
  VectorizedEncoding out;
  out.keypoint.assign(skeleton.size(), 0.0);
  if (const auto* fixed = std::get_if<FixedKeypoint>(&spec)) {
    out.keypoint[fixed->index] = 1.0;
    out.thickness = {0.0, 1.0, 0.0};
    return out;
  }
  const auto& limb_spec = std::get<LimbKeypointSpec>(spec);
  const auto [i, j] = skeleton.endpoints(limb_spec.limb);
  out.keypoint[i] = 1.0 - limb_spec.line_fraction;
  out.keypoint[j] = limb_spec.line_fraction;
  out.thickness = thickness_vector(limb_spec.signed_thickness);
  return out;
}

KeypointSpec decode_vectorized(std::span<const double> keypoint, const std::array<double, 3>& thickness,
                               const Skeleton& skeleton) {
  if (keypoint.size() != skeleton.size()) throw DomainError("keypoint vector length does not match skeleton");
  std::vector<int> nonzero;
  double sum = 0.0;
  for (std::size_t k = 0; k < keypoint.size(); ++k) {
    const double v = keypoint[k];
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("keypoint vector entries must lie in [0, 1]");
    if (v != 0.0) nonzero.push_back(static_cast<int>(k));
    sum += v;
  }
  if (nonzero.empty() || nonzero.size() > 2 || std::abs(sum - 1.0) > kSumTolerance) {
    throw DomainError("keypoint vector must hold one or two nonzero entries summing to 1");
  }
  for (double v : thickness) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("thickness vector entries must lie in [0, 1]");
  }
  if ((thickness[0] != 0.0 && thickness[2] != 0.0) ||
      std::abs(thickness[0] + thickness[1] + thickness[2] - 1.0) > kSumTolerance) {
    throw DomainError("thickness vector must be (t, 1 - t, 0) or (0, 1 - t, t)");
  }
  const double tau = thickness[2] != 0.0 ? -thickness[2] : thickness[0];

  if (nonzero.size() == 1) {
    if (tau == 0.0) return FixedKeypoint{nonzero[0]};
    return endpoint_limb(nonzero[0], tau, skeleton);
  }
  for (LimbId limb : kAllLimbs) {
    const auto [a, b] = skeleton.endpoints(limb);
    if (std::minmax(a, b) == std::minmax(nonzero[0], nonzero[1])) {
      return LimbKeypointSpec{limb, keypoint[b], tau};
    }
  }
  throw DomainError("keypoint vector mass is not on the endpoints of a limb");
}

KeypointSpec canonicalize(const KeypointSpec& spec, const Skeleton& skeleton) {
  validate(spec, skeleton);
  if (std::holds_alternative<FixedKeypoint>(spec)) return spec;
  const auto& limb_spec = std::get<LimbKeypointSpec>(spec);
  if (limb_spec.line_fraction != 0.0 && limb_spec.line_fraction != 1.0) return spec;
  const auto [a, b] = skeleton.endpoints(limb_spec.limb);
  const int keypoint = limb_spec.line_fraction == 0.0 ? a : b;
  if (limb_spec.signed_thickness == 0.0) return FixedKeypoint{keypoint};
  return endpoint_limb(keypoint, limb_spec.signed_thickness, skeleton);
}

Capsule NormPoseTemplate::capsule(LimbId limb) const {
  const auto [a, b] = limbs[limb_index(limb)];
  return {keypoints[a], keypoints[b], half_widths[limb_index(limb)]};
}

void NormPoseTemplate::validate() const {
  for (const Point2& p : keypoints) {
    if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0)) {
      throw ConfigError("norm pose coordinates must lie in [0, 1]^2");
    }
  }
  const int n = static_cast<int>(keypoints.size());
  for (std::size_t l = 0; l < kLimbCount; ++l) {
    const auto [a, b] = limbs[l];
    if (a < 0 || b < 0 || a >= n || b >= n || keypoints[a] == keypoints[b]) {
      throw ConfigError("norm pose limb " + std::string(limb_name(kAllLimbs[l])) + " has no usable bone");
    }
    if (!(half_widths[l] > 0.0)) throw ConfigError("norm pose half-widths must be positive");
  }
}

NormPoseTemplate NormPoseTemplate::default_for(const Skeleton& skeleton) {
  NormPoseTemplate t;
  const auto& coords = default_coordinates();
  for (const std::string& name : skeleton.keypoints) {
    const auto it = coords.find(name);
    if (it == coords.end()) throw ConfigError("no default norm pose coordinate for '" + name + "'");
    t.keypoints.push_back(it->second);
  }
  t.limbs = skeleton.limbs;
  for (std::size_t l = 0; l < kLimbCount; ++l) t.half_widths[l] = kDefaultHalfWidths[l % 4];
  t.validate();
  return t;
}

NormPoseTemplate NormPoseTemplate::from_json(const nlohmann::json& j, const Skeleton& skeleton) {
  reject_unknown_keys(j, {"keypoints", "half_widths"}, "norm_pose");
  NormPoseTemplate t;
  const auto coords = json_get<std::map<std::string, std::array<double, 2>>>(j, "keypoints", "norm_pose");
  for (const std::string& name : skeleton.keypoints) {
    const auto it = coords.find(name);
    if (it == coords.end()) throw ConfigError("norm_pose: missing coordinate for '" + name + "'");
    t.keypoints.push_back({it->second[0], it->second[1]});
  }
  if (coords.size() != skeleton.size()) throw ConfigError("norm_pose: coordinates for unknown keypoints");
  t.limbs = skeleton.limbs;
  const auto widths = json_get<std::map<std::string, double>>(j, "half_widths", "norm_pose");
  for (LimbId limb : kAllLimbs) {
    const auto it = widths.find(std::string(limb_name(limb)));
    if (it == widths.end()) throw ConfigError("norm_pose: missing half-width for " + std::string(limb_name(limb)));
    t.half_widths[limb_index(limb)] = it->second;
  }
  if (widths.size() != kLimbCount) throw ConfigError("norm_pose: half-widths for unknown limbs");
  t.validate();
  return t;
}

nlohmann::json NormPoseTemplate::to_json(const Skeleton& skeleton) const {
  nlohmann::json coords = nlohmann::json::object();
  for (std::size_t k = 0; k < keypoints.size(); ++k) coords[skeleton.keypoints[k]] = {keypoints[k].x, keypoints[k].y};
  nlohmann::json widths = nlohmann::json::object();
  for (LimbId limb : kAllLimbs) widths[std::string(limb_name(limb))] = half_widths[limb_index(limb)];
  return {{"keypoints", coords}, {"half_widths", widths}};
}

Point2 encode_norm_pose(const KeypointSpec& spec, const NormPoseTemplate& norm_pose) {
  Point2 p;
  if (const auto* fixed = std::get_if<FixedKeypoint>(&spec)) {
    if (fixed->index < 0 || fixed->index >= static_cast<int>(norm_pose.keypoints.size())) {
      throw DomainError("fixed keypoint index outside norm pose");
    }
    p = norm_pose.keypoints[fixed->index];
  } else {
    const auto& limb_spec = std::get<LimbKeypointSpec>(spec);
    limb_spec.validate();
    p = realize_keypoint(norm_pose.capsule(limb_spec.limb).cross_section(limb_spec.line_fraction),
                         limb_spec.signed_thickness);
  }
  return {std::clamp(p.x, 0.0, 1.0), std::clamp(p.y, 0.0, 1.0)};
}

LimbKeypointSpec decode_norm_pose(Point2 coord, const NormPoseTemplate& norm_pose) {
  constexpr double kEdgeSlack = 1e-12;
  std::optional<LimbKeypointSpec> cap_hit;
  for (LimbId limb : kAllLimbs) {
    const Capsule c = norm_pose.capsule(limb);
    const Point2 d = c.b - c.a;
    const double len = norm(d);
    const double p = dot(coord - c.a, d) / (len * len);
    const double offset = cross(d, coord - c.a) / len;
    const double reach = c.half_width * (1.0 + kEdgeSlack);
    if (p >= 0.0 && p <= 1.0 && std::abs(offset) <= reach) {
      return {limb, p, std::clamp(offset / c.half_width, -1.0, 1.0)};
    }
    if (!cap_hit && (distance(coord, c.a) <= reach || distance(coord, c.b) <= reach)) {
      cap_hit = LimbKeypointSpec{limb, std::clamp(p, 0.0, 1.0), std::clamp(offset / c.half_width, -1.0, 1.0)};
    }
  }
  if (cap_hit) return *cap_hit;
  throw NotOnLimb("norm pose coordinate lies on no limb");
}

}  // namespace limbpose
