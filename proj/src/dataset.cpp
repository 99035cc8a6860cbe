// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "limbpose/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "limbpose/errors.hpp"
#include "limbpose/json_util.hpp"

namespace limbpose {

namespace {

constexpr std::string_view kFormat = "limbpose-instances";
constexpr int kFormatVersion = 1;
constexpr int kDensePoseMaskSide = 256;

nlohmann::json point_json(Point2 p) { return nlohmann::json::array({p.x, p.y}); }

Point2 point_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw DataError("point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

nlohmann::json shape_json(const MaskShape& shape) {
  if (const auto* polygon = std::get_if<Polygon>(&shape)) {
    nlohmann::json vertices = nlohmann::json::array();
    for (const Point2& v : polygon->vertices) vertices.push_back(point_json(v));
    return {{"polygon", vertices}};
  }
  const Rle rle = encode_rle(std::get<Bitmap>(shape));
  return {{"rle", {{"size", {rle.height, rle.width}}, {"counts", rle.counts}}}};
}

Bitmap rle_json_to_bitmap(const nlohmann::json& j) {
  const auto size = j.at("size").get<std::array<int, 2>>();
  const auto& counts = j.at("counts");
  if (counts.is_string()) return decode_rle(rle_from_string(counts.get<std::string>(), size[0], size[1]));
  return decode_rle(Rle{size[0], size[1], counts.get<std::vector<std::uint32_t>>()});
}

LimbId parse_limb(const nlohmann::json& j) {
  const auto name = j.get<std::string>();
  const auto limb = limb_from_name(name);
  if (!limb) throw DataError("unknown limb label '" + name + "'");
  return *limb;
}

// COCO polygon segmentation: list of flat [x0, y0, x1, y1, ...] rings.
MaskShape coco_polygons(const nlohmann::json& rings, int width, int height) {
  std::vector<Polygon> polygons;
  for (const auto& ring : rings) {
    const auto flat = ring.get<std::vector<double>>();
    if (flat.size() < 6 || flat.size() % 2 != 0) throw DataError("polygon ring needs at least 3 vertices");
    Polygon p;
    for (std::size_t i = 0; i < flat.size(); i += 2) p.vertices.push_back({flat[i], flat[i + 1]});
    polygons.push_back(std::move(p));
  }
  if (polygons.empty()) throw DataError("empty polygon segmentation");
  if (polygons.size() == 1) return polygons.front();
  Bitmap merged(width, height);
  for (const Polygon& p : polygons) {
    const Bitmap part = rasterize(p, width, height);
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        if (part.at(r, c)) merged.set(r, c);
      }
    }
  }
  return merged;
}

MaskShape coco_segmentation(const nlohmann::json& seg, int width, int height) {
  if (seg.is_array()) return coco_polygons(seg, width, height);
  if (seg.is_object()) return rle_json_to_bitmap(seg);
  throw DataError("segmentation must be polygons or RLE");
}

// Resamples a bbox-relative DensePose part mask into image coordinates.
Bitmap densepose_to_image(const Bitmap& part, const std::array<double, 4>& bbox, int width, int height) {
  Bitmap out(width, height);
  const auto [x0, y0, bw, bh] = bbox;
  if (!(bw > 0.0 && bh > 0.0)) throw DataError("DensePose masks need a positive bbox");
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const double u = (c + 0.5 - x0) / bw * part.width();
      const double v = (r + 0.5 - y0) / bh * part.height();
      if (part.contains({u, v})) out.set(r, c);
    }
  }
  return out;
}

}  // namespace

const BodyPartMask* PoseInstance::mask(LimbId limb) const {
  const auto it = std::find_if(masks.begin(), masks.end(), [limb](const BodyPartMask& m) { return m.limb == limb; });
  return it == masks.end() ? nullptr : &*it;
}

double PoseInstance::torso_size(const Skeleton& skeleton) const {
  const auto [a, b] = skeleton.torso;
  if (visibility[a] <= 0 || visibility[b] <= 0) return 0.0;
  return distance(keypoints[a], keypoints[b]);
}

void PoseInstance::validate(const Skeleton& skeleton) const {
  const std::string where = "instance '" + id + "': ";
  if (keypoints.size() != skeleton.size() || visibility.size() != skeleton.size()) {
    throw DataError(where + "keypoint count does not match skeleton '" + skeleton.name + "'");
  }
  if (width <= 0 || height <= 0) throw DataError(where + "image size must be positive");
  for (std::size_t k = 0; k < keypoints.size(); ++k) {
    const int v = visibility[k];
    if (v < 0 || v > 2) throw DataError(where + "visibility must be 0, 1 or 2");
    if (v == 0) continue;
    const Point2 p = keypoints[k];
    if (!is_finite(p) || p.x < 0.0 || p.y < 0.0 || p.x > width || p.y > height) {
      throw DataError(where + "labeled keypoint '" + skeleton.keypoints[k] + "' lies outside the image");
    }
  }
  std::array<bool, kLimbCount> seen{};
  for (const BodyPartMask& m : masks) {
    if (seen[limb_index(m.limb)]) throw DataError(where + "duplicate mask for " + std::string(limb_name(m.limb)));
    seen[limb_index(m.limb)] = true;
    const auto [a, b] = skeleton.endpoints(m.limb);
    if (visibility[a] <= 0 || visibility[b] <= 0) {
      throw DataError(where + "mask for " + std::string(limb_name(m.limb)) + " has unlabeled endpoints");
    }
    if (m.endpoint_a != keypoints[a] || m.endpoint_b != keypoints[b]) {
      throw DataError(where + "mask endpoints differ from the fixed keypoints");
    }
    try {
      m.validate();
    } catch (const DomainError& e) {
      throw DataError(where + e.what());
    }
  }
  for (const GeneratedKeypoint& g : generated) {
    try {
      g.spec.validate();
    } catch (const DomainError& e) {
      throw DataError(where + e.what());
    }
  }
}

std::filesystem::path Dataset::image_path(const PoseInstance& instance) const {
  const std::filesystem::path p(instance.image);
  return p.is_absolute() ? p : image_root / p;
}

BodyPartMask make_mask(LimbId limb, MaskShape shape, const std::vector<Point2>& keypoints, const Skeleton& skeleton) {
  const auto [a, b] = skeleton.endpoints(limb);
  return BodyPartMask{limb, std::move(shape), keypoints.at(a), keypoints.at(b)};
}

nlohmann::json instance_to_json(const PoseInstance& instance) {
  nlohmann::json kps = nlohmann::json::array();
  for (std::size_t k = 0; k < instance.keypoints.size(); ++k) {
    kps.push_back({instance.keypoints[k].x, instance.keypoints[k].y, instance.visibility[k]});
  }
  nlohmann::json masks = nlohmann::json::array();
  for (const BodyPartMask& m : instance.masks) {
    nlohmann::json entry = shape_json(m.shape);
    entry["limb"] = std::string(limb_name(m.limb));
    masks.push_back(std::move(entry));
  }
  nlohmann::json generated = nlohmann::json::array();
  for (const GeneratedKeypoint& g : instance.generated) {
    generated.push_back({{"limb", std::string(limb_name(g.spec.limb))},
                         {"line_fraction", g.spec.line_fraction},
                         {"signed_thickness", g.spec.signed_thickness},
                         {"point", point_json(g.point)}});
  }
  return {{"id", instance.id},         {"image", instance.image}, {"width", instance.width},
          {"height", instance.height}, {"keypoints", kps},        {"bbox", instance.bbox},
          {"area", instance.area},     {"masks", masks},          {"generated", generated}};
}

PoseInstance instance_from_json(const nlohmann::json& j, const Skeleton& skeleton) {
  try {
    PoseInstance inst;
    inst.id = j.at("id").get<std::string>();
    inst.image = j.at("image").get<std::string>();
    inst.width = j.at("width").get<int>();
    inst.height = j.at("height").get<int>();
    for (const auto& kp : j.at("keypoints")) {
      const auto v = kp.get<std::array<double, 3>>();
      inst.keypoints.push_back({v[0], v[1]});
      inst.visibility.push_back(static_cast<int>(v[2]));
    }
    inst.bbox = j.at("bbox").get<std::array<double, 4>>();
    inst.area = j.at("area").get<double>();
    if (inst.keypoints.size() != skeleton.size()) {
      throw DataError("instance '" + inst.id + "': keypoint count does not match skeleton");
    }
    for (const auto& m : j.at("masks")) {
      MaskShape shape;
      if (m.contains("polygon")) {
        Polygon p;
        for (const auto& v : m.at("polygon")) p.vertices.push_back(point_from_json(v));
        shape = std::move(p);
      } else {
        shape = rle_json_to_bitmap(m.at("rle"));
      }
      inst.masks.push_back(make_mask(parse_limb(m.at("limb")), std::move(shape), inst.keypoints, skeleton));
    }
    for (const auto& g : j.at("generated")) {
      inst.generated.push_back(
          {{parse_limb(g.at("limb")), g.at("line_fraction").get<double>(), g.at("signed_thickness").get<double>()},
           point_from_json(g.at("point"))});
    }
    inst.validate(skeleton);
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed instance record: ") + e.what());
  }
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  nlohmann::json instances = nlohmann::json::array();
  for (const PoseInstance& inst : dataset.instances) instances.push_back(instance_to_json(inst));
  const nlohmann::json doc = {{"format", kFormat},
                              {"version", kFormatVersion},
                              {"skeleton", dataset.skeleton.to_json()},
                              {"instances", instances}};
  write_json_file(path, doc);
}

Dataset load_dataset(const std::filesystem::path& path) {
  const nlohmann::json doc = read_json_file(path);
  if (!doc.is_object() || doc.value("format", "") != kFormat) throw DataError(path.string() + ": not an instance file");
  if (doc.value("version", 0) != kFormatVersion) throw DataError(path.string() + ": unsupported version");
  Dataset ds;
  try {
    ds.skeleton = Skeleton::from_json(doc.at("skeleton"));
  } catch (const ConfigError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  ds.image_root = path.parent_path();
  for (const auto& j : doc.at("instances")) ds.instances.push_back(instance_from_json(j, ds.skeleton));
  return ds;
}

std::optional<LimbId> limb_from_densepose_part(int part) {
  switch (part) {
    case 6: return LimbId::kRightThigh;
    case 7: return LimbId::kLeftThigh;
    case 8: return LimbId::kRightLowerLeg;
    case 9: return LimbId::kLeftLowerLeg;
    case 10: return LimbId::kLeftUpperArm;
    case 11: return LimbId::kRightUpperArm;
    case 12: return LimbId::kLeftForearm;
    case 13: return LimbId::kRightForearm;
    default: return std::nullopt;
  }
}

Dataset load_coco(const std::filesystem::path& annotations, const std::filesystem::path& image_root,
                  const Skeleton& skeleton, LoadReport& report,
                  const std::optional<std::filesystem::path>& corrections) {
  const nlohmann::json doc = read_json_file(annotations);
  Dataset ds;
  ds.skeleton = skeleton;
  ds.image_root = image_root;

  struct ImageInfo {
    std::string file;
    int width;
    int height;
  };
  std::map<long long, ImageInfo> images;
  try {
    for (const auto& im : doc.at("images")) {
      images[im.at("id").get<long long>()] = {im.at("file_name").get<std::string>(), im.at("width").get<int>(),
                                              im.at("height").get<int>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(annotations.string() + ": malformed images table: " + e.what());
  }
  if (!doc.contains("annotations")) throw DataError(annotations.string() + ": no annotations");

  for (const auto& ann : doc.at("annotations")) {
    // Limb labels are checked up front: an unknown name is a schema error, not a bad record.
    if (ann.contains("limb_masks") && ann.at("limb_masks").is_array()) {
      for (const auto& lm : ann.at("limb_masks")) {
        if (lm.contains("part") && lm.at("part").is_string()) parse_limb(lm.at("part"));
      }
    }
    const std::string id = ann.contains("id") ? ann.at("id").dump() : "?";
    try {
      PoseInstance inst;
      inst.id = id;
      const auto img_it = images.find(ann.at("image_id").get<long long>());
      if (img_it == images.end()) throw DataError("unknown image_id");
      inst.image = img_it->second.file;
      inst.width = img_it->second.width;
      inst.height = img_it->second.height;
      const auto flat = ann.at("keypoints").get<std::vector<double>>();
      if (flat.size() != 3 * skeleton.size()) throw DataError("keypoint count does not match skeleton");
      for (std::size_t k = 0; k < skeleton.size(); ++k) {
        inst.keypoints.push_back({flat[3 * k], flat[3 * k + 1]});
        inst.visibility.push_back(static_cast<int>(flat[3 * k + 2]));
      }
      if (ann.contains("bbox")) inst.bbox = ann.at("bbox").get<std::array<double, 4>>();
      inst.area = ann.value("area", inst.bbox[2] * inst.bbox[3]);

      std::map<LimbId, MaskShape> shapes;
      if (ann.contains("dp_masks")) {
        const auto& dp = ann.at("dp_masks");
        for (std::size_t i = 0; i < dp.size(); ++i) {
          const auto limb = limb_from_densepose_part(static_cast<int>(i) + 1);
          if (!limb || dp[i].is_null() || (dp[i].is_array() && dp[i].empty())) continue;
          Bitmap part = rle_json_to_bitmap(dp[i]);
          if (part.width() != kDensePoseMaskSide || part.height() != kDensePoseMaskSide) {
            throw DataError("DensePose masks must be 256x256");
          }
          shapes[*limb] = densepose_to_image(part, inst.bbox, inst.width, inst.height);
        }
      }
      if (ann.contains("limb_masks")) {
        for (const auto& lm : ann.at("limb_masks")) {
          const auto& part = lm.at("part");
          std::optional<LimbId> limb = part.is_string() ? std::optional(parse_limb(part))
                                                        : limb_from_densepose_part(part.get<int>());
          if (!limb) continue;
          shapes[*limb] = coco_segmentation(lm.at("segmentation"), inst.width, inst.height);
        }
      }
      for (auto& [limb, shape] : shapes) {
        const auto [a, b] = skeleton.endpoints(limb);
        if (inst.visibility[a] <= 0 || inst.visibility[b] <= 0) {
          report.errors.push_back("annotation " + id + ": dropped " + std::string(limb_name(limb)) +
                                  " mask with unlabeled endpoints");
          continue;
        }
        inst.masks.push_back(make_mask(limb, std::move(shape), inst.keypoints, skeleton));
      }
      inst.validate(skeleton);
      ds.instances.push_back(std::move(inst));
      ++report.loaded;
    } catch (const DataError& e) {
      ++report.skipped;
      report.errors.push_back("annotation " + id + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      ++report.skipped;
      report.errors.push_back("annotation " + id + ": " + e.what());
    } catch (const DomainError& e) {
      ++report.skipped;
      report.errors.push_back("annotation " + id + ": " + e.what());
    }
  }
  if (corrections) apply_corrections(ds, read_json_file(*corrections));
  return ds;
}

std::size_t apply_corrections(Dataset& dataset, const nlohmann::json& overlay) {
  std::size_t applied = 0;
  try {
    for (const auto& entry : overlay.at("corrections")) {
      std::string instance_id = entry.at("instance_id").is_string() ? entry.at("instance_id").get<std::string>()
                                                                    : entry.at("instance_id").dump();
      auto it = std::find_if(dataset.instances.begin(), dataset.instances.end(),
                             [&](const PoseInstance& p) { return p.id == instance_id; });
      if (it == dataset.instances.end()) continue;
      for (const auto& swap : entry.at("swaps")) {
        if (!swap.is_array() || swap.size() != 2) throw DataError("a swap names exactly two limbs");
        const LimbId x = parse_limb(swap[0]);
        const LimbId y = parse_limb(swap[1]);
        for (BodyPartMask& m : it->masks) {
          if (m.limb == x) {
            m = make_mask(y, std::move(m.shape), it->keypoints, dataset.skeleton);
          } else if (m.limb == y) {
            m = make_mask(x, std::move(m.shape), it->keypoints, dataset.skeleton);
          }
        }
        ++applied;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed correction overlay: ") + e.what());
  }
  return applied;
}

}  // namespace limbpose
