// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

#include "json.hpp"
#include "limbpose/errors.hpp"

namespace limbpose {

/// Throws ConfigError naming the first key of `object` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& object, std::initializer_list<std::string_view> allowed,
                         std::string_view context);

/// Parses a JSON file; throws DataError with the path on I/O or syntax errors.
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Writes `value` with 1-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& value);

/// Typed lookup that reports the offending key on a missing key or type mismatch.
template <typename T>
T json_get(const nlohmann::json& object, std::string_view key, std::string_view context) {
  const auto it = object.find(key);
  if (it == object.end()) {
    throw ConfigError(std::string(context) + ": missing key '" + std::string(key) + "'");
  }
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(context) + ": bad value for '" + std::string(key) + "': " + e.what());
  }
}

template <typename T>
T json_get_or(const nlohmann::json& object, std::string_view key, T fallback, std::string_view context) {
  if (!object.contains(key)) return fallback;
  return json_get<T>(object, key, context);
}

}  // namespace limbpose
