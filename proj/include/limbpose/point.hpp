// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <random>

namespace limbpose {

/// Seeded random source used everywhere a draw is needed.
using Rng = std::mt19937_64;

/// 2-D point or vector in pixel units.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend constexpr Point2 operator*(Point2 a, double s) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Point2 a, Point2 b) = default;
};

constexpr double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }

/// z-component of the 3-D cross product; positive when b is counter-clockwise of a
/// in a y-up frame.
constexpr double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }

inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// Normal obtained by rotating `d` by +90 degrees; cross(d, perp(d)) > 0 for d != 0.
constexpr Point2 perp(Point2 d) { return {-d.y, d.x}; }

inline bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

/// (1 - t) * a + t * b
constexpr Point2 lerp(Point2 a, Point2 b, double t) { return (1.0 - t) * a + t * b; }

}  // namespace limbpose
