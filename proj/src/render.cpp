// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "limbpose/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "limbpose/errors.hpp"
#include "limbpose/synthetic.hpp"

namespace limbpose {

namespace {

using Rgb = std::array<std::uint8_t, 3>;

// blue on the negative side, yellow on the line, red on the positive side
Rgb thickness_color(double tau) {
  const double t = std::clamp(tau, -1.0, 1.0);
  if (t < 0) {
    const double a = -t;
    return {static_cast<std::uint8_t>(std::lround(255 * (1 - a) + 40 * a)),
            static_cast<std::uint8_t>(std::lround(220 * (1 - a) + 120 * a)),
            static_cast<std::uint8_t>(std::lround(40 * (1 - a) + 255 * a))};
  }
  return {255, static_cast<std::uint8_t>(std::lround(220 * (1 - t) + 50 * t)),
          static_cast<std::uint8_t>(std::lround(40 * (1 - t) + 50 * t))};
}

void stamp(Image& img, double cx, double cy, double radius, const Rgb& color) {
  const int r0 = static_cast<int>(std::floor(cy - radius));
  const int r1 = static_cast<int>(std::ceil(cy + radius));
  const int c0 = static_cast<int>(std::floor(cx - radius));
  const int c1 = static_cast<int>(std::ceil(cx + radius));
  for (int r = std::max(r0, 0); r <= std::min(r1, img.height - 1); ++r) {
    for (int c = std::max(c0, 0); c <= std::min(c1, img.width - 1); ++c) {
      const double dx = c + 0.5 - cx;
      const double dy = r + 0.5 - cy;
      if (dx * dx + dy * dy > radius * radius) continue;
      for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = color[ch];
    }
  }
}

std::string hex(const Rgb& c) { return fmt::format("#{:02x}{:02x}{:02x}", c[0], c[1], c[2]); }

}  // namespace

std::vector<LimbKeypointSpec> isoline_specs(std::span<const LimbId> limbs, int count, int samples) {
  if (count < 1 || samples < 2) throw DomainError("iso-lines need count >= 1 and samples >= 2");
  std::vector<LimbKeypointSpec> specs;
  for (LimbId limb : limbs) {
    for (int i = 0; i < count; ++i) {
      const double tau = count == 1 ? 0.0 : -1.0 + 2.0 * i / (count - 1);
      for (int s = 0; s < samples; ++s) specs.push_back({limb, static_cast<double>(s) / (samples - 1), tau});
    }
  }
  return specs;
}

Overlay build_overlay(const TrainSample& sample, Predictor& predictor, const RenderOptions& options) {
  std::vector<LimbId> limbs;
  for (const BodyPartMask& m : sample.instance.masks) limbs.push_back(m.limb);
  std::sort(limbs.begin(), limbs.end());
  const bool grid = options.mode == RenderMode::kGrid;
  const std::vector<LimbKeypointSpec> limb_specs =
      grid ? make_eval_grid(limbs, options.grid_rows, options.grid_cols)
           : isoline_specs(limbs, options.isoline_count, options.isoline_samples);
  Overlay overlay;
  if (limb_specs.empty()) return overlay;
  const std::vector<KeypointSpec> specs(limb_specs.begin(), limb_specs.end());
  const std::vector<Point2> points = predictor.locate(sample, specs);
  if (points.size() != specs.size()) throw DomainError("predictor returned the wrong number of points");
  if (grid) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      overlay.dots.push_back({sample.transform.invert(points[i]), limb_specs[i].signed_thickness});
    }
    return overlay;
  }
  const auto per_line = static_cast<std::size_t>(options.isoline_samples);
  for (std::size_t first = 0; first < points.size(); first += per_line) {
    OverlayLine line{{}, limb_specs[first].signed_thickness};
    for (std::size_t i = first; i < first + per_line; ++i) line.points.push_back(sample.transform.invert(points[i]));
    overlay.lines.push_back(std::move(line));
  }
  return overlay;
}

Image darken(const Image& image, double factor) {
  if (!(factor >= 0.0 && factor <= 1.0)) throw DomainError("darken factor must lie in [0, 1]");
  Image out = image;
  for (auto& v : out.data) v = static_cast<std::uint8_t>(std::lround(v * factor));
  return out;
}

Image draw_overlay(const Image& image, const Overlay& overlay, const RenderOptions& options) {
  if (options.scale < 1) throw DomainError("render scale must be at least 1");
  const Image base = to_rgb(darken(image, options.darken));
  const int s = options.scale;
  Image out(base.width * s, base.height * s, 3);
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = base.at(r / s, c / s, ch);
    }
  }
  const double line_radius = std::max(1.0, 0.25 * s);
  for (const OverlayLine& line : overlay.lines) {
    const Rgb color = thickness_color(line.signed_thickness);
    for (std::size_t i = 1; i < line.points.size(); ++i) {
      const Point2 a = s * line.points[i - 1];
      const Point2 b = s * line.points[i];
      const int steps = std::max(1, static_cast<int>(std::ceil(distance(a, b) / (0.5 * line_radius))));
      for (int k = 0; k <= steps; ++k) {
        const Point2 p = lerp(a, b, static_cast<double>(k) / steps);
        stamp(out, p.x, p.y, line_radius, color);
      }
    }
  }
  const double dot_radius = std::max(1.5, 0.5 * s);
  for (const OverlayDot& d : overlay.dots) {
    stamp(out, s * d.point.x, s * d.point.y, dot_radius, thickness_color(d.signed_thickness));
  }
  return out;
}

std::string overlay_svg(const Overlay& overlay, int width, int height, const RenderOptions& options,
                        const std::string& background) {
  const int s = options.scale;
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:xlink=\"http://www.w3.org/1999/xlink\" "
      "width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
      width * s, height * s, width, height);
  svg += fmt::format(
      "<image x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" xlink:href=\"{}\" style=\"image-rendering:pixelated\"/>\n",
      width, height, background);
  for (const OverlayLine& line : overlay.lines) {
    std::string pts;
    for (const Point2& p : line.points) pts += fmt::format("{:.3f},{:.3f} ", p.x, p.y);
    if (!pts.empty()) pts.pop_back();
    svg += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{:.3f}\"/>\n", pts,
                       hex(thickness_color(line.signed_thickness)), 0.5);
  }
  for (const OverlayDot& d : overlay.dots) {
    svg += fmt::format("<circle cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"{:.3f}\" fill=\"{}\"/>\n", d.point.x, d.point.y, 0.6,
                       hex(thickness_color(d.signed_thickness)));
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace limbpose
