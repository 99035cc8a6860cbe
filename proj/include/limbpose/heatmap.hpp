// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "limbpose/point.hpp"

namespace limbpose {

/// Score grid; cell (r, c) is centered on input point ((c + 0.5) * stride_x,
/// (r + 0.5) * stride_y).
struct Heatmap {
  int width = 48;
  int height = 64;
  double stride_x = 4.0;
  double stride_y = 4.0;
  std::vector<double> values;  // row-major

  Heatmap() = default;
  Heatmap(int width, int height, double stride_x, double stride_y);

  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }
  double& at(int row, int col) { return values[static_cast<std::size_t>(row) * width + col]; }

  Point2 cell_center(double row, double col) const { return {(col + 0.5) * stride_x, (row + 0.5) * stride_y}; }
  /// Input-space extent covered by the grid.
  double input_width() const { return width * stride_x; }
  double input_height() const { return height * stride_y; }

  void validate() const;

  friend bool operator==(const Heatmap&, const Heatmap&) = default;
};

struct RenderedHeatmap {
  Heatmap heatmap;
  bool target_outside = false;  // map is all zero when set
};

/// exp(-((c - x)^2 + (r - y)^2) / (2 sigma^2)) around the target expressed in
/// cell units, (x, y) = target / stride - 0.5.
RenderedHeatmap render_gaussian(Point2 target, int width, int height, double stride_x, double stride_y,
                                double sigma);

enum class DecodeFlag { kNone, kLowConfidence, kFallbackArgmax };

struct DecodedPoint {
  Point2 point;
  double confidence = 0.0;  // peak value of the map
  DecodeFlag flag = DecodeFlag::kNone;
};

/// Center of the maximal cell; ties go to the smallest (row, col).
DecodedPoint decode_argmax(const Heatmap& heatmap);

/// Smooths with a Gaussian (peak preserved), takes the log and applies a
/// second-order Taylor step at the argmax cell. Peaks whose smoothing window
/// would cross the edge skip the smoothing. Falls back to argmax within two
/// cells of the border or for a singular Hessian.
DecodedPoint decode_dark(const Heatmap& heatmap, double smoothing_sigma = 2.0);

/// Flat binary dump: "LPHM", version, dims, strides, row-major doubles.
void write_heatmap(std::ostream& out, const Heatmap& heatmap);
Heatmap read_heatmap(std::istream& in);
void write_heatmap(const std::filesystem::path& path, const Heatmap& heatmap);
Heatmap read_heatmap(const std::filesystem::path& path);

}  // namespace limbpose
