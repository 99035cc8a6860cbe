// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "limbpose/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "limbpose/errors.hpp"

namespace limbpose {

namespace {

void require_fraction(double p_b) {
  if (!(p_b >= 0.0 && p_b <= 1.0)) {
    throw DomainError("line fraction must lie in [0, 1], got " + std::to_string(p_b));
  }
}

Point2 unit_normal(Point2 a, Point2 b) {
  const Point2 d = b - a;
  return (1.0 / norm(d)) * perp(d);
}

double polygon_scale(const Polygon& polygon) {
  double extent = 1.0;
  for (const Point2& v : polygon.vertices) extent = std::max({extent, std::abs(v.x), std::abs(v.y)});
  return extent;
}

CrossSection polygon_section(const Polygon& polygon, Point2 bp, Point2 normal) {
  const double tolerance = 1e-12 * polygon_scale(polygon);
  if (polygon.on_boundary(bp, tolerance)) return {bp, bp, bp};
  if (!polygon.contains(bp)) throw NoSection("projection point lies outside the mask");

  double nearest_pos = std::numeric_limits<double>::infinity();
  double nearest_neg = -std::numeric_limits<double>::infinity();
  const std::size_t n = polygon.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 p = polygon.vertices[i];
    const Point2 edge = polygon.vertices[(i + 1) % n] - p;
    const double denom = cross(normal, edge);
    if (std::abs(denom) <= 1e-15 * norm(edge)) continue;  // edge parallel to the section line
    const Point2 w = p - bp;
    const double u = -cross(normal, w) / denom;
    if (u < -1e-12 || u > 1.0 + 1e-12) continue;
    const double s = cross(w, edge) / denom;
    if (s > 0.0) {
      nearest_pos = std::min(nearest_pos, s);
    } else if (s < 0.0) {
      nearest_neg = std::max(nearest_neg, s);
    }
  }
  if (!std::isfinite(nearest_pos) || !std::isfinite(nearest_neg)) {
    throw NoSection("section line leaves the mask on only one side");
  }
  return {bp, bp + nearest_pos * normal, bp + nearest_neg * normal};
}

constexpr double kRasterStep = 0.25;
constexpr double kRasterResolution = 1.0 / 64.0;

double raster_crossing(const Bitmap& bitmap, Point2 bp, Point2 direction) {
  const double limit = 2.0 * (bitmap.width() + bitmap.height()) + 1.0;
  double inside = 0.0;
  double outside = kRasterStep;
  while (bitmap.contains(bp + outside * direction)) {
    inside = outside;
    outside += kRasterStep;
    if (outside > limit) throw NoSection("no boundary crossing along the section line");
  }
  while (outside - inside > kRasterResolution) {
    const double mid = 0.5 * (inside + outside);
    if (bitmap.contains(bp + mid * direction)) {
      inside = mid;
    } else {
      outside = mid;
    }
  }
  return 0.5 * (inside + outside);
}

CrossSection raster_section(const Bitmap& bitmap, Point2 bp, Point2 normal) {
  if (!bitmap.contains(bp)) throw NoSection("projection point lies outside the mask");
  const double pos = raster_crossing(bitmap, bp, normal);
  const double neg = raster_crossing(bitmap, bp, -1.0 * normal);
  return {bp, bp + pos * normal, bp - neg * normal};
}

}  // namespace

bool BodyPartMask::contains(Point2 p) const {
  return std::visit([p](const auto& s) { return s.contains(p); }, shape);
}

void BodyPartMask::validate() const {
  if (!is_finite(endpoint_a) || !is_finite(endpoint_b)) throw DomainError("mask endpoints must be finite");
  if (endpoint_a == endpoint_b) throw DomainError("mask endpoints must differ");
  if (const auto* polygon = std::get_if<Polygon>(&shape)) {
    polygon->validate();
  } else if (std::get<Bitmap>(shape).count() == 0) {
    throw DomainError("raster mask has no set pixel");
  }
}

double LimbKeypointSpec::thickness() const { return std::abs(signed_thickness); }

void LimbKeypointSpec::validate() const {
  require_fraction(line_fraction);
  if (!(signed_thickness >= -1.0 && signed_thickness <= 1.0)) {
    throw DomainError("signed thickness must lie in [-1, 1], got " + std::to_string(signed_thickness));
  }
}

bool Capsule::contains(Point2 p) const {
  const Point2 d = b - a;
  const double t = std::clamp(dot(p - a, d) / dot(d, d), 0.0, 1.0);
  return distance(p, a + t * d) <= half_width;
}

CrossSection Capsule::cross_section(double p_b) const {
  require_fraction(p_b);
  const Point2 bp = lerp(a, b, p_b);
  const Point2 normal = unit_normal(a, b);
  return {bp, bp + half_width * normal, bp - half_width * normal};
}

Polygon Capsule::to_polygon(int cap_segments) const {
  const Point2 normal = unit_normal(a, b);
  const Point2 along = (1.0 / distance(a, b)) * (b - a);
  Polygon polygon;
  auto arc = [&](Point2 center, Point2 start, Point2 mid) {
    for (int k = 0; k <= cap_segments; ++k) {
      const double theta = std::numbers::pi * k / cap_segments;
      const double c = k == cap_segments ? -1.0 : std::cos(theta);
      const double s = k == cap_segments ? 0.0 : std::sin(theta);
      polygon.vertices.push_back(center + half_width * (c * start + s * mid));
    }
  };
  arc(b, normal, along);
  arc(a, -1.0 * normal, -1.0 * along);
  if (polygon.signed_area() < 0.0) std::reverse(polygon.vertices.begin(), polygon.vertices.end());
  return polygon;
}

Point2 project_point(const BodyPartMask& mask, double p_b) {
  require_fraction(p_b);
  return lerp(mask.endpoint_a, mask.endpoint_b, p_b);
}

CrossSection cross_section(const BodyPartMask& mask, double p_b) {
  const Point2 bp = project_point(mask, p_b);
  if (mask.endpoint_a == mask.endpoint_b) throw NoSection("mask endpoints coincide");
  const Point2 normal = unit_normal(mask.endpoint_a, mask.endpoint_b);
  if (const auto* polygon = std::get_if<Polygon>(&mask.shape)) return polygon_section(*polygon, bp, normal);
  return raster_section(std::get<Bitmap>(mask.shape), bp, normal);
}

Point2 realize_keypoint(const CrossSection& section, double signed_thickness) {
  const double t = std::abs(signed_thickness);
  if (t != 0.0 && section.degenerate()) {
    throw DomainError("degenerate cross-section only admits zero thickness");
  }
  const Point2 edge = signed_thickness >= 0.0 ? section.side1 : section.side2;
  return (1.0 - t) * section.projection + t * edge;
}

Point2 realize_keypoint(const BodyPartMask& mask, const LimbKeypointSpec& spec) {
  spec.validate();
  if (spec.limb != mask.limb) throw DomainError("keypoint spec and mask refer to different limbs");
  return realize_keypoint(cross_section(mask, spec.line_fraction), spec.signed_thickness);
}

SampledKeypoint sample_keypoint(const BodyPartMask& mask, Rng& rng, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("thickness sampling sigma must be positive");
  std::uniform_real_distribution<double> fraction(0.0, 1.0);
  std::normal_distribution<double> raw_thickness(0.0, sigma);
  for (int attempt = 0; attempt < kSampleRetryBudget; ++attempt) {
    const double p_b = fraction(rng);
    const double z = raw_thickness(rng);
    const double p_t = std::max(0.0, 1.0 - std::abs(z));
    const double tau = p_t == 0.0 ? 0.0 : (z >= 0.0 ? p_t : -p_t);
    CrossSection section;
    try {
      section = cross_section(mask, p_b);
    } catch (const NoSection&) {
      continue;
    }
    if (section.degenerate() && tau != 0.0) continue;
    LimbKeypointSpec spec{mask.limb, p_b, tau};
    return {spec, realize_keypoint(section, tau)};
  }
  throw GenerationFailed("no valid cross-section after " + std::to_string(kSampleRetryBudget) + " draws");
}

int side_of(Point2 a, Point2 b, Point2 p) {
  const double c = cross(b - a, p - a);
  return (c > 0.0) - (c < 0.0);
}

SideClassification classify_prediction(const BodyPartMask& mask, Point2 predicted,
                                       const LimbKeypointSpec& ground_truth) {
  const SideClassification unresolvable{};
  const Point2 d = mask.endpoint_b - mask.endpoint_a;
  const double len2 = dot(d, d);
  if (!(len2 > 0.0) || !is_finite(predicted)) return unresolvable;

  double p = dot(predicted - mask.endpoint_a, d) / len2;
  constexpr double kSlack = 1e-9;
  if (!(p >= -kSlack && p <= 1.0 + kSlack)) return unresolvable;
  p = std::clamp(p, 0.0, 1.0);

  CrossSection section;
  try {
    section = cross_section(mask, p);
  } catch (const NoSection&) {
    return unresolvable;
  }

  const double len = std::sqrt(len2);
  const double signed_offset = cross(d, predicted - section.projection) / len;
  const double offset = std::abs(signed_offset);
  const int gt_side = ground_truth.signed_thickness >= 0.0 ? 1 : -1;
  const int pred_side = signed_offset > 0.0 ? 1 : (signed_offset < 0.0 ? -1 : gt_side);

  const double half_span = distance(pred_side > 0 ? section.side1 : section.side2, section.projection);
  double ratio = 0.0;
  if (half_span > 0.0) {
    ratio = offset / half_span;
  } else if (offset > 0.0) {
    return unresolvable;
  }
  if (ratio > kMaxResolvableRatio) return unresolvable;
  return {pred_side == gt_side ? SideClass::kSameSide : SideClass::kOppositeSide, ratio};
}

}  // namespace limbpose
