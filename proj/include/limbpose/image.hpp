// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace limbpose {

/// 8-bit interleaved image with 1 (gray) or 3 (RGB) channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int width, int height, int channels, std::uint8_t fill = 0);

  std::uint8_t& at(int row, int col, int channel = 0) {
    return data[(static_cast<std::size_t>(row) * width + col) * channels + channel];
  }
  std::uint8_t at(int row, int col, int channel = 0) const {
    return data[(static_cast<std::size_t>(row) * width + col) * channels + channel];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Reads any PNG and converts it to `channels` (1 or 3) 8-bit channels.
Image read_png(const std::filesystem::path& path, int channels = 1);
void write_png(const std::filesystem::path& path, const Image& image);

/// Luma of an RGB image, identity for gray.
Image to_gray(const Image& image);
Image to_rgb(const Image& image);

}  // namespace limbpose
