// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "limbpose/point.hpp"

namespace limbpose {

/// Simple closed polygon; the closing edge from the last vertex back to the
/// first is implicit.
struct Polygon {
  std::vector<Point2> vertices;

  /// Shoelace area, positive for counter-clockwise order in a y-up frame.
  double signed_area() const;

  /// Even-odd containment test. Points exactly on an edge may land on
  /// either side; use on_boundary() when that matters.
  bool contains(Point2 p) const;

  /// True when p lies within `tolerance` of some edge.
  bool on_boundary(Point2 p, double tolerance) const;

  /// Throws DomainError unless there are >= 3 finite vertices and nonzero area.
  void validate() const;

  friend bool operator==(const Polygon&, const Polygon&) = default;
};

/// Row-major binary raster. Pixel (row, col) covers the continuous square
/// [col, col + 1) x [row, row + 1), so its center is (col + 0.5, row + 0.5).
class Bitmap {
 public:
  Bitmap() = default;
  Bitmap(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  bool at(int row, int col) const { return bits_[index(row, col)] != 0; }
  void set(int row, int col, bool value = true) { bits_[index(row, col)] = value ? 1 : 0; }

  /// Containment of a continuous point; anything outside the raster is outside.
  bool contains(Point2 p) const;

  std::size_t count() const;
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend bool operator==(const Bitmap&, const Bitmap&) = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// COCO run-length encoding: counts alternate background/foreground runs,
/// starting with background, over the pixels in column-major order.
struct Rle {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;

  friend bool operator==(const Rle&, const Rle&) = default;
};

Rle encode_rle(const Bitmap& bitmap);
Bitmap decode_rle(const Rle& rle);

/// Parses the compact string form used by the COCO API for compressed counts.
Rle rle_from_string(std::string_view counts, int height, int width);
std::string rle_to_string(const Rle& rle);

/// Sets every pixel whose center falls inside `polygon` after scaling the
/// polygon coordinates by `scale`.
Bitmap rasterize(const Polygon& polygon, int width, int height, double scale = 1.0);

}  // namespace limbpose
