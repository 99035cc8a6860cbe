// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "limbpose/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "limbpose/errors.hpp"

namespace limbpose {

namespace {

constexpr double kMinHalfWidth = 2.0;
constexpr int kCapSegments = 32;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

double radians(double degrees) { return degrees * std::numbers::pi / 180.0; }

// Point at `length` from `from`, `angle` radians away from straight down.
Point2 step(Point2 from, double angle, double length) {
  return from + length * Point2{std::sin(angle), std::cos(angle)};
}

bool capsule_inside(const Capsule& c, int width, int height) {
  for (Point2 p : {c.a, c.b}) {
    if (p.x - c.half_width < 0.0 || p.x + c.half_width > width || p.y - c.half_width < 0.0 ||
        p.y + c.half_width > height) {
      return false;
    }
  }
  return true;
}

}  // namespace

Capsule SyntheticBodySpec::capsule(const SyntheticLimb& limb, const Skeleton& skeleton) const {
  const auto [a, b] = skeleton.endpoints(limb.limb);
  return {keypoints.at(a), keypoints.at(b), limb.half_width};
}

void SyntheticBodySpec::validate(const Skeleton& skeleton) const {
  if (width <= 0 || height <= 0) throw DomainError("synthetic image size must be positive");
  if (keypoints.size() != skeleton.size() || visibility.size() != skeleton.size()) {
    throw DomainError("synthetic keypoints must match the skeleton");
  }
  if (limbs.size() < 2 || limbs.size() > kLimbCount) throw DomainError("synthetic bodies have 2 to 8 limbs");
  std::array<bool, kLimbCount> seen{};
  for (const SyntheticLimb& l : limbs) {
    if (seen[limb_index(l.limb)]) throw DomainError("synthetic limb listed twice");
    seen[limb_index(l.limb)] = true;
    if (!(l.half_width >= kMinHalfWidth)) throw DomainError("synthetic half-width must be at least 2 px");
    const auto [a, b] = skeleton.endpoints(l.limb);
    if (visibility[a] <= 0 || visibility[b] <= 0) throw DomainError("synthetic limb endpoints must be labeled");
    const Capsule c = capsule(l, skeleton);
    if (c.a == c.b) throw DomainError("synthetic limb endpoints coincide");
    if (!capsule_inside(c, width, height)) throw DomainError("synthetic capsule leaves the image");
  }
  if (!(noise >= 0.0)) throw DomainError("synthetic noise must be non-negative");
}

SyntheticBodySpec random_body_spec(const SyntheticLayout& layout, const Skeleton& skeleton, Rng& rng) {
  const double sx = layout.width / 48.0;
  const double sy = layout.height / 64.0;
  const double s = std::min(sx, sy);
  const auto idx = [&](std::string_view name) { return skeleton.require_index(name); };

  SyntheticBodySpec spec;
  spec.width = layout.width;
  spec.height = layout.height;
  spec.noise = layout.noise;
  spec.seed = rng();
  for (;;) {
    spec.keypoints.assign(skeleton.size(), Point2{});
    spec.visibility.assign(skeleton.size(), 0);
    auto set = [&](std::string_view name, Point2 p) {
      spec.keypoints[idx(name)] = p;
      spec.visibility[idx(name)] = 2;
    };
    const double cx = layout.width / 2.0 + sx * uniform(rng, -3, 3);
    const double shoulder_y = sy * (12 + uniform(rng, -2, 2));
    const double hip_y = shoulder_y + sy * (17 + uniform(rng, -2, 2));
    const double shoulder_half = sx * (7.5 + uniform(rng, -1, 1));
    const double hip_half = sx * (5 + uniform(rng, -1, 1));
    for (const auto& [side, prefix] : {std::pair{1.0, std::string("left_")}, std::pair{-1.0, std::string("right_")}}) {
      const Point2 shoulder{cx + side * shoulder_half, shoulder_y};
      const Point2 hip{cx + side * hip_half, hip_y};
      const double upper = radians(uniform(rng, 5, 70));
      const double fore = upper + radians(uniform(rng, -40, 60));
      const Point2 elbow = step(shoulder, side * upper, s * uniform(rng, 10, 13));
      const Point2 wrist = step(elbow, side * fore, s * uniform(rng, 9, 12));
      const double thigh = radians(uniform(rng, -5, 25));
      const double shin = thigh + radians(uniform(rng, -20, 20));
      const Point2 knee = step(hip, side * thigh, s * uniform(rng, 11, 14));
      const Point2 ankle = step(knee, side * shin, s * uniform(rng, 10, 13));
      set(prefix + "shoulder", shoulder);
      set(prefix + "elbow", elbow);
      set(prefix + "wrist", wrist);
      set(prefix + "hip", hip);
      set(prefix + "knee", knee);
      set(prefix + "ankle", ankle);
    }
    const double scale = uniform(rng, 1.0 - layout.half_width_jitter, 1.0 + layout.half_width_jitter);
    spec.limbs.clear();
    bool inside = true;
    for (LimbId limb : kAllLimbs) {
      SyntheticLimb l{limb, std::max(kMinHalfWidth, s * scale * layout.half_widths[limb_index(limb) % 4]), 0.0};
      inside = inside && capsule_inside(spec.capsule(l, skeleton), layout.width, layout.height);
      spec.limbs.push_back(l);
    }
    if (!inside) continue;
    for (SyntheticLimb& l : spec.limbs) l.intensity = uniform(rng, 0.55, 0.95);
    spec.torso = {spec.keypoints[idx("left_shoulder")], spec.keypoints[idx("right_shoulder")],
                  spec.keypoints[idx("right_hip")], spec.keypoints[idx("left_hip")]};
    return spec;
  }
}

SyntheticInstance generate_synthetic(const SyntheticBodySpec& spec, const Skeleton& skeleton) {
  spec.validate(skeleton);
  Rng rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const Polygon torso{spec.torso};
  std::vector<Capsule> capsules;
  for (const SyntheticLimb& l : spec.limbs) capsules.push_back(spec.capsule(l, skeleton));

  SyntheticInstance out;
  out.image = Image(spec.width, spec.height, 1);
  double min_x = spec.width, min_y = spec.height, max_x = 0.0, max_y = 0.0;
  std::size_t body_pixels = 0;
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      const Point2 center{c + 0.5, r + 0.5};
      double v = spec.background + spec.noise * noise(rng);
      bool body = false;
      if (torso.vertices.size() >= 3 && torso.contains(center)) {
        v = spec.torso_intensity + spec.noise * noise(rng);
        body = true;
      }
      for (std::size_t i = 0; i < capsules.size(); ++i) {
        if (capsules[i].contains(center)) {
          v = spec.limbs[i].intensity;
          body = true;
        }
      }
      if (body) {
        ++body_pixels;
        min_x = std::min(min_x, c + 0.0);
        min_y = std::min(min_y, r + 0.0);
        max_x = std::max(max_x, c + 1.0);
        max_y = std::max(max_y, r + 1.0);
      }
      out.image.at(r, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
  }

  PoseInstance& inst = out.instance;
  inst.width = spec.width;
  inst.height = spec.height;
  inst.keypoints = spec.keypoints;
  inst.visibility = spec.visibility;
  inst.bbox = body_pixels > 0 ? std::array<double, 4>{min_x, min_y, max_x - min_x, max_y - min_y}
                              : std::array<double, 4>{0.0, 0.0, 0.0, 0.0};
  inst.area = static_cast<double>(body_pixels);
  for (std::size_t i = 0; i < capsules.size(); ++i) {
    inst.masks.push_back(make_mask(spec.limbs[i].limb, capsules[i].to_polygon(kCapSegments), inst.keypoints, skeleton));
  }
  out.capsules = std::move(capsules);
  return out;
}

Split split(std::size_t count, const std::array<double, 3>& fractions, std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw DomainError("split fractions must be non-negative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("split fractions must sum to 1");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n = static_cast<double>(count);
  const auto train_end = static_cast<std::size_t>(std::llround(fractions[0] * n));
  const auto val_end = std::min(count, static_cast<std::size_t>(std::llround((fractions[0] + fractions[1]) * n)));
  Split out;
  out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_end));
  out.val.assign(order.begin() + static_cast<std::ptrdiff_t>(train_end),
                 order.begin() + static_cast<std::ptrdiff_t>(val_end));
  out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(val_end), order.end());
  return out;
}

std::vector<LimbKeypointSpec> make_eval_grid(std::span<const LimbId> limbs, int rows, int cols) {
  if (rows < 1 || cols < 1) throw DomainError("evaluation grid needs at least one row and column");
  std::vector<LimbKeypointSpec> specs;
  for (LimbId limb : limbs) {
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        const double tau = cols == 1 ? 0.0 : -1.0 + 2.0 * j / (cols - 1);
        specs.push_back({limb, (i + 1.0) / (rows + 1.0), tau});
      }
    }
  }
  return specs;
}

std::vector<LimbKeypointSpec> make_eval_grid(const PoseInstance& instance, int rows, int cols) {
  std::vector<LimbId> limbs;
  for (const BodyPartMask& m : instance.masks) limbs.push_back(m.limb);
  std::sort(limbs.begin(), limbs.end());
  return make_eval_grid(limbs, rows, cols);
}

}  // namespace limbpose
