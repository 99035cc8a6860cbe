// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "limbpose/image.hpp"

#include <png.h>

#include <cmath>
#include <cstring>

#include "limbpose/errors.hpp"

namespace limbpose {

namespace {

png_uint_32 png_format(int channels) {
  if (channels == 1) return PNG_FORMAT_GRAY;
  if (channels == 3) return PNG_FORMAT_RGB;
  throw DomainError("images must have 1 or 3 channels");
}

}  // namespace

Image::Image(int w, int h, int c, std::uint8_t fill)
    : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {
  if (w <= 0 || h <= 0) throw DomainError("image dimensions must be positive");
  png_format(c);
}

Image read_png(const std::filesystem::path& path, int channels) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw DataError(path.string() + ": " + png.message);
  }
  png.format = png_format(channels);
  Image image(static_cast<int>(png.width), static_cast<int>(png.height), channels);
  if (!png_image_finish_read(&png, nullptr, image.data.data(), 0, nullptr)) {
    png_image_free(&png);
    throw DataError(path.string() + ": " + png.message);
  }
  return image;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = png_format(image.channels);
  if (image.data.size() != static_cast<std::size_t>(image.width) * image.height * image.channels) {
    throw DomainError("image buffer size mismatch");
  }
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.data.data(), 0, nullptr)) {
    throw DataError(path.string() + ": " + png.message);
  }
}

Image to_gray(const Image& image) {
  if (image.channels == 1) return image;
  Image out(image.width, image.height, 1);
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      const double y = 0.299 * image.at(r, c, 0) + 0.587 * image.at(r, c, 1) + 0.114 * image.at(r, c, 2);
      out.at(r, c) = static_cast<std::uint8_t>(std::lround(y));
    }
  }
  return out;
}

Image to_rgb(const Image& image) {
  if (image.channels == 3) return image;
  Image out(image.width, image.height, 3);
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    for (int ch = 0; ch < 3; ++ch) out.data[3 * i + ch] = image.data[i];
  }
  return out;
}

}  // namespace limbpose
