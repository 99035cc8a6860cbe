// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "limbpose/geometry.hpp"
#include "limbpose/image.hpp"
#include "limbpose/skeleton.hpp"

namespace limbpose {

struct GeneratedKeypoint {
  LimbKeypointSpec spec;
  Point2 point;

  friend bool operator==(const GeneratedKeypoint&, const GeneratedKeypoint&) = default;
};

/// One annotated person. Mask endpoints always equal the fixed keypoints the
/// skeleton assigns to the mask's limb.
struct PoseInstance {
  std::string id;
  std::string image;  // relative to the dataset's image root unless absolute
  int width = 0;
  int height = 0;
  std::vector<Point2> keypoints;
  std::vector<int> visibility;  // 0 unlabeled, 1 labeled but occluded, 2 visible
  std::array<double, 4> bbox{};  // x, y, w, h
  double area = 0.0;
  std::vector<BodyPartMask> masks;
  std::vector<GeneratedKeypoint> generated;

  const BodyPartMask* mask(LimbId limb) const;
  double torso_size(const Skeleton& skeleton) const;
  /// Throws DataError naming the violated invariant.
  void validate(const Skeleton& skeleton) const;
};

struct Dataset {
  Skeleton skeleton = Skeleton::coco17();
  std::filesystem::path image_root;
  std::vector<PoseInstance> instances;

  std::filesystem::path image_path(const PoseInstance& instance) const;
};

/// Builds a mask whose endpoints are taken from the instance keypoints.
BodyPartMask make_mask(LimbId limb, MaskShape shape, const std::vector<Point2>& keypoints,
                       const Skeleton& skeleton);

nlohmann::json instance_to_json(const PoseInstance& instance);
PoseInstance instance_from_json(const nlohmann::json& j, const Skeleton& skeleton);

/// Canonical instance document; image paths are relative to the file's directory.
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);

struct LoadReport {
  std::size_t loaded = 0;
  std::size_t skipped = 0;
  std::vector<std::string> errors;
};

/// Limb for a DensePose part number (1-based, 14 parts); empty for
/// torso, hands, feet and head.
std::optional<LimbId> limb_from_densepose_part(int part);

/// COCO-style annotations whose records carry `limb_masks` entries
/// ({"part": DensePose part number or limb name, "segmentation": polygons or
/// RLE}) and/or DensePose `dp_masks`. Malformed records are skipped and
/// reported; an unknown limb name aborts with DataError.
Dataset load_coco(const std::filesystem::path& annotations, const std::filesystem::path& image_root,
                  const Skeleton& skeleton, LoadReport& report,
                  const std::optional<std::filesystem::path>& corrections = std::nullopt);

/// Applies {"corrections": [{"instance_id": id, "swaps": [[limb, limb], ...]}]}.
/// Returns the number of swaps applied.
std::size_t apply_corrections(Dataset& dataset, const nlohmann::json& overlay);

/// Uniform scale plus offset from source image pixels to model input pixels.
struct InputTransform {
  double scale = 1.0;
  Point2 offset;

  Point2 apply(Point2 p) const { return scale * p + offset; }
  Point2 invert(Point2 p) const { return (1.0 / scale) * (p - offset); }
};

struct FittedSample {
  std::vector<float> pixels;  // row-major gray in [0, 1], input size
  InputTransform transform;
  PoseInstance instance;  // geometry in input coordinates
};

/// Crops the instance box (enlarged by `padding`, widened to the input aspect
/// ratio) and resamples it bilinearly to the input size. Images already at
/// the input size pass through unchanged. Keypoints leaving the frame become
/// unlabeled and masks losing an endpoint are dropped.
FittedSample fit_to_input(const PoseInstance& instance, const Image& image, int input_width, int input_height,
                          const Skeleton& skeleton, double padding = 1.25);

}  // namespace limbpose
