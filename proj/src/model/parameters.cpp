// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "limbpose/model/parameters.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "limbpose/errors.hpp"

namespace limbpose {

std::size_t ParameterLayout::add(std::string name, int rows, int cols, ParamInit init) {
  if (rows <= 0 || cols <= 0) throw DomainError("parameter block '" + name + "' must be non-empty");
  entries_.push_back({std::move(name), total_, rows, cols});
  inits_.push_back(init);
  total_ += entries_.back().size();
  return entries_.size() - 1;
}

const ParamEntry& ParameterLayout::find(std::string_view name) const {
  const auto it = std::find_if(entries_.begin(), entries_.end(), [name](const ParamEntry& e) { return e.name == name; });
  if (it == entries_.end()) throw DomainError("no parameter block '" + std::string(name) + "'");
  return *it;
}

template <typename T>
ParamVector<T> ParameterLayout::initialize(std::uint64_t seed) const {
  ParamVector<T> data(total_, T(0));
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const ParamEntry& e = entries_[i];
    switch (inits_[i]) {
      case ParamInit::kZero:
        break;
      case ParamInit::kOne:
        std::fill_n(data.begin() + static_cast<std::ptrdiff_t>(e.offset), e.size(), T(1));
        break;
      case ParamInit::kFanIn: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(e.rows));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (std::size_t k = 0; k < e.size(); ++k) data[e.offset + k] = static_cast<T>(u(rng));
        break;
      }
    }
  }
  return data;
}

template ParamVector<float> ParameterLayout::initialize<float>(std::uint64_t) const;
template ParamVector<double> ParameterLayout::initialize<double>(std::uint64_t) const;

}  // namespace limbpose
