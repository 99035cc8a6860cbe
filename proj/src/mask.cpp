// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "limbpose/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "limbpose/errors.hpp"

namespace limbpose {

double Polygon::signed_area() const {
  double twice = 0.0;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    twice += cross(vertices[i], vertices[(i + 1) % n]);
  }
  return 0.5 * twice;
}

bool Polygon::contains(Point2 p) const {
  bool inside = false;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2 a = vertices[i];
    const Point2 b = vertices[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_at) inside = !inside;
    }
  }
  return inside;
}

namespace {

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 d = b - a;
  const double len2 = dot(d, d);
  double t = len2 > 0.0 ? dot(p - a, d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, a + t * d);
}

}  // namespace

bool Polygon::on_boundary(Point2 p, double tolerance) const {
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (point_segment_distance(p, vertices[i], vertices[(i + 1) % n]) <= tolerance) return true;
  }
  return false;
}

void Polygon::validate() const {
  if (vertices.size() < 3) throw DomainError("polygon needs at least 3 vertices");
  for (const Point2& v : vertices) {
    if (!is_finite(v)) throw DomainError("polygon vertex is not finite");
  }
  if (signed_area() == 0.0) throw DomainError("polygon has zero area");
}

Bitmap::Bitmap(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw DomainError("bitmap dimensions must be non-negative");
  bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

bool Bitmap::contains(Point2 p) const {
  if (!(p.x >= 0.0 && p.y >= 0.0)) return false;
  const double col = std::floor(p.x);
  const double row = std::floor(p.y);
  if (col >= width_ || row >= height_) return false;
  return at(static_cast<int>(row), static_cast<int>(col));
}

std::size_t Bitmap::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

Rle encode_rle(const Bitmap& bitmap) {
  Rle rle{bitmap.height(), bitmap.width(), {}};
  std::uint32_t run = 0;
  bool current = false;
  for (int col = 0; col < bitmap.width(); ++col) {
    for (int row = 0; row < bitmap.height(); ++row) {
      const bool value = bitmap.at(row, col);
      if (value != current) {
        rle.counts.push_back(run);
        run = 0;
        current = value;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

Bitmap decode_rle(const Rle& rle) {
  const std::uint64_t total = static_cast<std::uint64_t>(rle.height) * rle.width;
  const std::uint64_t sum = std::accumulate(rle.counts.begin(), rle.counts.end(), std::uint64_t{0});
  if (sum != total) {
    throw DataError("RLE counts sum to " + std::to_string(sum) + ", expected " +
                    std::to_string(total));
  }
  Bitmap bitmap(rle.width, rle.height);
  std::uint64_t pos = 0;
  bool value = false;
  for (const std::uint32_t run : rle.counts) {
    if (value) {
      for (std::uint64_t k = pos; k < pos + run; ++k) {
        bitmap.set(static_cast<int>(k % rle.height), static_cast<int>(k / rle.height));
      }
    }
    pos += run;
    value = !value;
  }
  return bitmap;
}

Rle rle_from_string(std::string_view counts, int height, int width) {
  Rle rle{height, width, {}};
  std::size_t p = 0;
  while (p < counts.size()) {
    long x = 0;
    int k = 0;
    bool more = true;
    while (more) {
      if (p >= counts.size()) throw DataError("truncated compressed RLE string");
      const long c = static_cast<long>(counts[p]) - 48;
      x |= (c & 0x1f) << (5 * k);
      more = (c & 0x20) != 0;
      ++p;
      ++k;
      if (!more && (c & 0x10)) x |= static_cast<long>(~0UL << (5 * k));
    }
    // Runs past the second are delta-coded against the run two back.
    if (rle.counts.size() > 2) x += static_cast<long>(rle.counts[rle.counts.size() - 2]);
    if (x < 0) throw DataError("negative run in compressed RLE string");
    rle.counts.push_back(static_cast<std::uint32_t>(x));
  }
  return rle;
}

std::string rle_to_string(const Rle& rle) {
  std::string out;
  for (std::size_t i = 0; i < rle.counts.size(); ++i) {
    long x = static_cast<long>(rle.counts[i]);
    if (i > 2) x -= static_cast<long>(rle.counts[i - 2]);
    bool more = true;
    while (more) {
      long c = x & 0x1f;
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      out.push_back(static_cast<char>(c + 48));
    }
  }
  return out;
}

Bitmap rasterize(const Polygon& polygon, int width, int height, double scale) {
  Bitmap bitmap(width, height);
  const std::size_t n = polygon.vertices.size();
  if (n < 3) return bitmap;
  std::vector<Point2> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = scale * polygon.vertices[i];

  // Scanline fill at pixel-center rows: crossings of y = row + 0.5 with each edge.
  std::vector<double> xs;
  for (int row = 0; row < height; ++row) {
    const double y = row + 0.5;
    xs.clear();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Point2 a = v[i];
      const Point2 b = v[j];
      if ((a.y > y) != (b.y > y)) xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      // Pixel centers c + 0.5 with xs[k] <= c + 0.5 < xs[k + 1].
      const int first = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
      const int last = std::min(width - 1, static_cast<int>(std::ceil(xs[k + 1] - 0.5)) - 1);
      for (int col = first; col <= last; ++col) bitmap.set(row, col);
    }
  }
  return bitmap;
}

}  // namespace limbpose
