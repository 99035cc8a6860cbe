// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/StdVector>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace limbpose {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

/// Flat parameter storage. Aligned so that Eigen takes the same code paths
/// (and rounds the same way) wherever the buffer lands in memory.
template <typename T>
using ParamVector = std::vector<T, Eigen::aligned_allocator<T>>;

/// Named (rows x cols) block inside a flat parameter array.
struct ParamEntry {
  std::string name;
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

enum class ParamInit { kZero, kOne, kFanIn };

class ParameterLayout {
 public:
  /// Appends a block and returns its index.
  std::size_t add(std::string name, int rows, int cols, ParamInit init);

  const std::vector<ParamEntry>& entries() const { return entries_; }
  const ParamEntry& operator[](std::size_t i) const { return entries_[i]; }
  const ParamEntry& find(std::string_view name) const;
  std::size_t total() const { return total_; }

  /// Weights ~ U(-1/sqrt(rows), 1/sqrt(rows)), biases 0, norm gains 1;
  /// drawn in layout order from a generator seeded with `seed`.
  template <typename T>
  ParamVector<T> initialize(std::uint64_t seed) const;

 private:
  std::vector<ParamEntry> entries_;
  std::vector<ParamInit> inits_;
  std::size_t total_ = 0;
};

template <typename T>
Eigen::Map<Mat<T>> view(T* data, const ParamEntry& e) {
  return Eigen::Map<Mat<T>>(data + e.offset, e.rows, e.cols);
}

template <typename T>
Eigen::Map<const Mat<T>> view(const T* data, const ParamEntry& e) {
  return Eigen::Map<const Mat<T>>(data + e.offset, e.rows, e.cols);
}

template <typename T>
Eigen::Map<const RowVec<T>> row_view(const T* data, const ParamEntry& e) {
  return Eigen::Map<const RowVec<T>>(data + e.offset, static_cast<Eigen::Index>(e.size()));
}

template <typename T>
Eigen::Map<RowVec<T>> row_view(T* data, const ParamEntry& e) {
  return Eigen::Map<RowVec<T>>(data + e.offset, static_cast<Eigen::Index>(e.size()));
}

}  // namespace limbpose
