// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "limbpose/dataset.hpp"
#include "limbpose/errors.hpp"

namespace limbpose {

namespace {

float bilinear(const Image& gray, double x, double y) {
  // (x, y) in continuous pixel coordinates; sample centers sit at +0.5.
  const double fx = x - 0.5;
  const double fy = y - 0.5;
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const double ax = fx - x0;
  const double ay = fy - y0;
  auto px = [&](int r, int c) -> double {
    r = std::clamp(r, 0, gray.height - 1);
    c = std::clamp(c, 0, gray.width - 1);
    return gray.at(r, c);
  };
  const double top = (1 - ax) * px(y0, x0) + ax * px(y0, x0 + 1);
  const double bottom = (1 - ax) * px(y0 + 1, x0) + ax * px(y0 + 1, x0 + 1);
  return static_cast<float>(((1 - ay) * top + ay * bottom) / 255.0);
}

MaskShape transform_shape(const MaskShape& shape, const InputTransform& t, int width, int height) {
  if (const auto* polygon = std::get_if<Polygon>(&shape)) {
    Polygon out;
    for (const Point2& v : polygon->vertices) out.vertices.push_back(t.apply(v));
    return out;
  }
  const Bitmap& src = std::get<Bitmap>(shape);
  Bitmap out(width, height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (src.contains(t.invert({c + 0.5, r + 0.5}))) out.set(r, c);
    }
  }
  return out;
}

}  // namespace

FittedSample fit_to_input(const PoseInstance& instance, const Image& image, int input_width, int input_height,
                          const Skeleton& skeleton, double padding) {
  if (input_width <= 0 || input_height <= 0) throw DomainError("input size must be positive");
  const Image gray = to_gray(image);
  FittedSample out;
  out.pixels.resize(static_cast<std::size_t>(input_width) * input_height);
  if (gray.width == input_width && gray.height == input_height) {
    for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] = static_cast<float>(gray.data[i] / 255.0);
    out.instance = instance;
    return out;
  }

  auto [bx, by, bw, bh] = instance.bbox;
  if (!(bw > 0.0 && bh > 0.0)) {
    bx = 0.0;
    by = 0.0;
    bw = gray.width;
    bh = gray.height;
  }
  const double aspect = static_cast<double>(input_width) / input_height;
  double cw = bw * padding;
  double ch = bh * padding;
  if (cw / ch < aspect) {
    cw = ch * aspect;
  } else {
    ch = cw / aspect;
  }
  const Point2 center{bx + bw / 2.0, by + bh / 2.0};
  InputTransform& t = out.transform;
  t.scale = input_width / cw;
  t.offset = Point2{input_width / 2.0, input_height / 2.0} - t.scale * center;

  for (int r = 0; r < input_height; ++r) {
    for (int c = 0; c < input_width; ++c) {
      const Point2 src = t.invert({c + 0.5, r + 0.5});
      out.pixels[static_cast<std::size_t>(r) * input_width + c] = bilinear(gray, src.x, src.y);
    }
  }

  PoseInstance& inst = out.instance;
  inst.id = instance.id;
  inst.image = instance.image;
  inst.width = input_width;
  inst.height = input_height;
  inst.visibility = instance.visibility;
  for (std::size_t k = 0; k < instance.keypoints.size(); ++k) {
    const Point2 p = t.apply(instance.keypoints[k]);
    inst.keypoints.push_back(p);
    if (p.x < 0.0 || p.y < 0.0 || p.x > input_width || p.y > input_height) inst.visibility[k] = 0;
  }
  const Point2 corner = t.apply({instance.bbox[0], instance.bbox[1]});
  inst.bbox = {corner.x, corner.y, instance.bbox[2] * t.scale, instance.bbox[3] * t.scale};
  inst.area = instance.area * t.scale * t.scale;
  for (const BodyPartMask& m : instance.masks) {
    const auto [a, b] = skeleton.endpoints(m.limb);
    if (inst.visibility[a] <= 0 || inst.visibility[b] <= 0) continue;
    inst.masks.push_back(make_mask(m.limb, transform_shape(m.shape, t, input_width, input_height), inst.keypoints,
                                   skeleton));
  }
  for (const GeneratedKeypoint& g : instance.generated) inst.generated.push_back({g.spec, t.apply(g.point)});
  return out;
}

}  // namespace limbpose
