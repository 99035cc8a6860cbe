// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "limbpose/heatmap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "limbpose/errors.hpp"

namespace limbpose {

namespace {

constexpr std::array<char, 4> kMagic = {'L', 'P', 'H', 'M'};
constexpr std::uint32_t kVersion = 1;
constexpr int kMinSide = 8;

int reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) sum += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& v : k) v /= sum;
  return k;
}

Heatmap blur(const Heatmap& hm, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  Heatmap tmp = hm;
  Heatmap out = hm;
  for (int r = 0; r < hm.height; ++r) {
    for (int c = 0; c < hm.width; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * hm.at(r, reflect101(c + i, hm.width));
      tmp.at(r, c) = acc;
    }
  }
  for (int r = 0; r < hm.height; ++r) {
    for (int c = 0; c < hm.width; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp.at(reflect101(r + i, hm.height), c);
      out.at(r, c) = acc;
    }
  }
  return out;
}

struct Peak {
  int row = 0;
  int col = 0;
  double value = 0.0;
  bool uniform = true;
};

Peak find_peak(const Heatmap& hm) {
  if (hm.values.empty()) throw DomainError("cannot decode an empty heatmap");
  Peak p{0, 0, hm.values[0], true};
  for (int r = 0; r < hm.height; ++r) {
    for (int c = 0; c < hm.width; ++c) {
      const double v = hm.at(r, c);
      if (v != hm.values[0]) p.uniform = false;
      if (v > p.value) p = {r, c, v, p.uniform};
    }
  }
  return p;
}

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw DataError("truncated heatmap dump");
  return value;
}

}  // namespace

Heatmap::Heatmap(int w, int h, double sx, double sy)
    : width(w), height(h), stride_x(sx), stride_y(sy), values(static_cast<std::size_t>(w) * h, 0.0) {
  validate();
}

void Heatmap::validate() const {
  if (width < kMinSide || height < kMinSide) throw DomainError("heatmap sides must be at least 8 cells");
  if (!(stride_x > 0.0 && stride_y > 0.0)) throw DomainError("heatmap strides must be positive");
  if (values.size() != static_cast<std::size_t>(width) * height) throw DomainError("heatmap value count mismatch");
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError("heatmap holds a non-finite value");
  }
}

RenderedHeatmap render_gaussian(Point2 target, int width, int height, double stride_x, double stride_y,
                                double sigma) {
  if (!(sigma > 0.0)) throw DomainError("heatmap sigma must be positive");
  RenderedHeatmap out{Heatmap(width, height, stride_x, stride_y), false};
  Heatmap& hm = out.heatmap;
  if (!is_finite(target) || target.x < 0.0 || target.y < 0.0 || target.x >= hm.input_width() ||
      target.y >= hm.input_height()) {
    out.target_outside = true;
    return out;
  }
  const double x = target.x / stride_x - 0.5;
  const double y = target.y / stride_y - 0.5;
  const double denom = 2.0 * sigma * sigma;
  std::vector<double> gx(width);
  for (int c = 0; c < width; ++c) gx[c] = std::exp(-(c - x) * (c - x) / denom);
  for (int r = 0; r < height; ++r) {
    const double gy = std::exp(-(r - y) * (r - y) / denom);
    for (int c = 0; c < width; ++c) hm.at(r, c) = gy * gx[c];
  }
  return out;
}

DecodedPoint decode_argmax(const Heatmap& heatmap) {
  const Peak p = find_peak(heatmap);
  return {heatmap.cell_center(p.row, p.col), p.value, p.uniform ? DecodeFlag::kLowConfidence : DecodeFlag::kNone};
}

DecodedPoint decode_dark(const Heatmap& heatmap, double smoothing_sigma) {
  if (!(smoothing_sigma > 0.0)) throw DomainError("smoothing sigma must be positive");
  const Peak p = find_peak(heatmap);
  DecodedPoint out{heatmap.cell_center(p.row, p.col), p.value, DecodeFlag::kNone};
  if (p.uniform) {
    out.flag = DecodeFlag::kLowConfidence;
    return out;
  }
  const int r = p.row;
  const int c = p.col;
  if (r < 2 || c < 2 || r >= heatmap.height - 2 || c >= heatmap.width - 2) {
    out.flag = DecodeFlag::kFallbackArgmax;
    return out;
  }

  // the Taylor stencil reads two cells out; where the kernel would then reach
  // past the edge the padding skews the curvature, so use the raw map there
  const int reach = static_cast<int>(std::ceil(3.0 * smoothing_sigma)) + 2;
  const bool interior = r >= reach && c >= reach && r < heatmap.height - reach && c < heatmap.width - reach;
  Heatmap smooth = interior ? blur(heatmap, smoothing_sigma) : heatmap;
  const double smooth_max = *std::max_element(smooth.values.begin(), smooth.values.end());
  const double gain = smooth_max > 0.0 ? p.value / smooth_max : 1.0;
  auto L = [&](int rr, int cc) { return std::log(std::max(smooth.at(rr, cc) * gain, 1e-10)); };

  const double dx = 0.5 * (L(r, c + 1) - L(r, c - 1));
  const double dy = 0.5 * (L(r + 1, c) - L(r - 1, c));
  const double dxx = 0.25 * (L(r, c + 2) - 2.0 * L(r, c) + L(r, c - 2));
  const double dyy = 0.25 * (L(r + 2, c) - 2.0 * L(r, c) + L(r - 2, c));
  const double dxy = 0.25 * (L(r + 1, c + 1) - L(r - 1, c + 1) - L(r + 1, c - 1) + L(r - 1, c - 1));
  const double det = dxx * dyy - dxy * dxy;
  if (!(std::abs(det) > 1e-12) || !std::isfinite(det)) {
    out.flag = DecodeFlag::kFallbackArgmax;
    return out;
  }
  const double ox = std::clamp(-(dyy * dx - dxy * dy) / det, -0.5, 0.5);
  const double oy = std::clamp(-(dxx * dy - dxy * dx) / det, -0.5, 0.5);
  out.point = heatmap.cell_center(r + oy, c + ox);
  return out;
}

void write_heatmap(std::ostream& out, const Heatmap& heatmap) {
  heatmap.validate();
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  put<std::int32_t>(out, heatmap.width);
  put<std::int32_t>(out, heatmap.height);
  put<double>(out, heatmap.stride_x);
  put<double>(out, heatmap.stride_y);
  out.write(reinterpret_cast<const char*>(heatmap.values.data()),
            static_cast<std::streamsize>(heatmap.values.size() * sizeof(double)));
  if (!out) throw DataError("heatmap dump write failed");
}

Heatmap read_heatmap(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw DataError("not a heatmap dump");
  if (take<std::uint32_t>(in) != kVersion) throw DataError("unsupported heatmap dump version");
  Heatmap hm;
  hm.width = take<std::int32_t>(in);
  hm.height = take<std::int32_t>(in);
  hm.stride_x = take<double>(in);
  hm.stride_y = take<double>(in);
  if (hm.width < kMinSide || hm.height < kMinSide || hm.width > 1 << 14 || hm.height > 1 << 14) {
    throw DataError("implausible heatmap dimensions");
  }
  hm.values.resize(static_cast<std::size_t>(hm.width) * hm.height);
  if (!in.read(reinterpret_cast<char*>(hm.values.data()),
               static_cast<std::streamsize>(hm.values.size() * sizeof(double)))) {
    throw DataError("truncated heatmap dump");
  }
  hm.validate();
  return hm;
}

void write_heatmap(const std::filesystem::path& path, const Heatmap& heatmap) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_heatmap(out, heatmap);
}

Heatmap read_heatmap(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_heatmap(in);
}

}  // namespace limbpose
