// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "limbpose/image.hpp"
#include "limbpose/model/predict.hpp"

namespace limbpose {

enum class RenderMode { kGrid, kIsolines };

struct RenderOptions {
  RenderMode mode = RenderMode::kGrid;
  int grid_rows = 4;
  int grid_cols = 5;
  int isoline_count = 9;     // center line plus (count - 1) / 2 per side
  int isoline_samples = 21;  // points along each line
  double darken = 0.5;       // kept fraction of the original intensity
  int scale = 4;
};

struct OverlayDot {
  Point2 point;  // source image pixels
  double signed_thickness = 0.0;
};

struct OverlayLine {
  std::vector<Point2> points;
  double signed_thickness = 0.0;
};

struct Overlay {
  std::vector<OverlayDot> dots;
  std::vector<OverlayLine> lines;
};

/// Specs of `count` iso-thickness lines per limb, `samples` points each,
/// ordered line by line.
std::vector<LimbKeypointSpec> isoline_specs(std::span<const LimbId> limbs, int count, int samples);

/// Asks the predictor for every grid point or iso-line sample of each limb
/// mask and maps the answers back to source image pixels.
Overlay build_overlay(const TrainSample& sample, Predictor& predictor, const RenderOptions& options);

Image darken(const Image& image, double factor);

/// RGB of the darkened image upscaled by `scale` with the overlay drawn on top.
Image draw_overlay(const Image& image, const Overlay& overlay, const RenderOptions& options);

/// Vector version referencing `background` (a PNG next to the SVG).
std::string overlay_svg(const Overlay& overlay, int width, int height, const RenderOptions& options,
                        const std::string& background);

}  // namespace limbpose
