// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <numbers>

#include "limbpose/geometry.hpp"

namespace limbpose::testing {

inline Polygon box(double x0, double x1, double y0, double y1) {
  return Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
}

inline Polygon circle(Point2 center, double radius, int segments) {
  Polygon p;
  for (int i = 0; i < segments; ++i) {
    const double a = 2.0 * std::numbers::pi * i / segments;
    p.vertices.push_back({center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
  }
  return p;
}

inline BodyPartMask polygon_mask(Polygon p, Point2 a, Point2 b, LimbId limb = LimbId::kLeftUpperArm) {
  return BodyPartMask{limb, MaskShape{std::move(p)}, a, b};
}

// x in [0, 10], y in [-2, 3], bone (0, 0) -> (10, 0)
inline BodyPartMask rectangle_example() { return polygon_mask(box(0, 10, -2, 3), {0, 0}, {10, 0}); }

inline bool near(Point2 a, Point2 b, double tol) { return distance(a, b) <= tol; }

}  // namespace limbpose::testing
