// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <variant>

#include "limbpose/limb.hpp"
#include "limbpose/mask.hpp"
#include "limbpose/point.hpp"

namespace limbpose {

using MaskShape = std::variant<Polygon, Bitmap>;

/// Segmentation of one limb together with the two fixed keypoints enclosing it.
struct BodyPartMask {
  LimbId limb = LimbId::kLeftUpperArm;
  MaskShape shape;
  Point2 endpoint_a;  // e.g. shoulder for an upper arm
  Point2 endpoint_b;  // e.g. elbow

  bool is_polygon() const { return std::holds_alternative<Polygon>(shape); }
  bool contains(Point2 p) const;
  void validate() const;
};

/// Canonical parameterization of a point on a limb.
///
/// `line_fraction` positions the projection point along endpoint_a -> endpoint_b.
/// `signed_thickness` is the fraction of the way from the projection point to
/// the boundary; its sign picks the side (positive = side 1, see CrossSection).
struct LimbKeypointSpec {
  LimbId limb = LimbId::kLeftUpperArm;
  double line_fraction = 0.0;
  double signed_thickness = 0.0;

  double thickness() const;
  void validate() const;

  friend bool operator==(const LimbKeypointSpec&, const LimbKeypointSpec&) = default;
};

/// Boundary crossings of the line through `projection` orthogonal to the bone.
///
/// side1 is where cross(endpoint_b - endpoint_a, c - projection) > 0, side2
/// the opposite side. When the projection sits on the boundary both
/// crossings collapse onto it.
struct CrossSection {
  Point2 projection;
  Point2 side1;
  Point2 side2;

  bool degenerate() const { return side1 == projection && side2 == projection; }
};

/// Limb-shaped region: all points within `half_width` of the segment a-b.
struct Capsule {
  Point2 a;
  Point2 b;
  double half_width = 1.0;

  bool contains(Point2 p) const;
  /// Closed-form cross-section for p_b in [0, 1]: both sides at half_width.
  CrossSection cross_section(double p_b) const;
  /// Counter-clockwise outline with `cap_segments` edges per semicircle.
  Polygon to_polygon(int cap_segments = 32) const;
};

/// b_p = p_b * endpoint_b + (1 - p_b) * endpoint_a.
Point2 project_point(const BodyPartMask& mask, double p_b);

/// Nearest boundary crossing on each side of the projection point along the
/// orthogonal line. Polygons are intersected exactly; rasters are marched in
/// 0.25 px steps and bisected to 1/64 px.
CrossSection cross_section(const BodyPartMask& mask, double p_b);

/// Applies the thickness interpolation between the projection point and the
/// crossing on the side selected by the sign of `signed_thickness`.
Point2 realize_keypoint(const BodyPartMask& mask, const LimbKeypointSpec& spec);
Point2 realize_keypoint(const CrossSection& section, double signed_thickness);

struct SampledKeypoint {
  LimbKeypointSpec spec;
  Point2 point;
};

inline constexpr int kSampleRetryBudget = 16;

/// Draws p_b ~ U[0, 1) and z ~ N(0, sigma^2), sets thickness max(0, 1 - |z|)
/// with the sign of z, and realizes the point. Redraws when the sampled
/// projection point has no cross-section; throws GenerationFailed after
/// kSampleRetryBudget attempts.
SampledKeypoint sample_keypoint(const BodyPartMask& mask, Rng& rng, double sigma = 1.0);

enum class SideClass { kSameSide, kOppositeSide, kUnresolvable };

struct SideClassification {
  SideClass side = SideClass::kUnresolvable;
  /// Distance from the prediction's projection point, relative to the
  /// crossing on the prediction's own side. Zero when unresolvable.
  double ratio = 0.0;
};

/// Predictions farther than this multiple of their own side's half-span from
/// the bone line are treated as outside the mask's cross-section span.
inline constexpr double kMaxResolvableRatio = 2.0;

/// Locates `predicted` relative to the limb: orthogonal projection onto the
/// bone segment, cross-section there, and the side relative to the
/// ground-truth keypoint's side.
SideClassification classify_prediction(const BodyPartMask& mask, Point2 predicted,
                                       const LimbKeypointSpec& ground_truth);

/// Signed side of `p` relative to the directed line a -> b (+1, -1, or 0).
int side_of(Point2 a, Point2 b, Point2 p);

}  // namespace limbpose
