// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace limbpose {

/// The eight limb parts that carry freely selectable keypoints. The numeric
/// order is the tie-break order wherever "lowest limb" is used.
enum class LimbId : std::uint8_t {
  kLeftUpperArm = 0,
  kLeftForearm,
  kLeftThigh,
  kLeftLowerLeg,
  kRightUpperArm,
  kRightForearm,
  kRightThigh,
  kRightLowerLeg,
};

inline constexpr std::size_t kLimbCount = 8;

inline constexpr std::array<LimbId, kLimbCount> kAllLimbs = {
    LimbId::kLeftUpperArm,  LimbId::kLeftForearm,  LimbId::kLeftThigh,  LimbId::kLeftLowerLeg,
    LimbId::kRightUpperArm, LimbId::kRightForearm, LimbId::kRightThigh, LimbId::kRightLowerLeg,
};

constexpr std::size_t limb_index(LimbId id) { return static_cast<std::size_t>(id); }

std::string_view limb_name(LimbId id);
std::optional<LimbId> limb_from_name(std::string_view name);

/// Same limb class on the other body side.
LimbId mirror_limb(LimbId id);

}  // namespace limbpose
