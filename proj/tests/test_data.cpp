// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "limbpose/errors.hpp"
#include "limbpose/synthetic.hpp"

namespace limbpose {
namespace {

std::filesystem::path fixtures() {
  const char* env = std::getenv("LIMBPOSE_FIXTURES");
  return env ? std::filesystem::path(env) : std::filesystem::path("tests/fixtures");
}

class TempDir {
 public:
  TempDir() : path_(std::filesystem::temp_directory_path() / ("limbpose_data_" + std::to_string(::getpid()))) {
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

Bitmap as_bitmap(const MaskShape& shape, int w, int h) {
  if (const auto* b = std::get_if<Bitmap>(&shape)) return *b;
  return rasterize(std::get<Polygon>(shape), w, h);
}

TEST(LoadCoco, MinimalFile) {
  LoadReport report;
  const Dataset ds = load_coco(fixtures() / "coco_minimal.json", fixtures(), Skeleton::coco17(), report);
  EXPECT_EQ(report.loaded, 2u);
  EXPECT_EQ(report.skipped, 2u);
  ASSERT_EQ(ds.instances.size(), 2u);
  const PoseInstance& p = ds.instances[0];
  EXPECT_EQ(p.id, "1");
  EXPECT_EQ(p.width, 20);
  EXPECT_EQ(p.keypoints[5], (Point2{5, 6}));
  EXPECT_EQ(p.visibility[5], 2);
  EXPECT_EQ(p.visibility[0], 0);
  EXPECT_EQ(p.masks.size(), 3u);
  ASSERT_NE(p.mask(LimbId::kLeftThigh), nullptr);
  EXPECT_EQ(p.mask(LimbId::kLeftUpperArm)->endpoint_b, (Point2{11, 6}));
  EXPECT_EQ(ds.image_path(p), fixtures() / "person.png");
}

TEST(LoadCoco, PolygonAndRleAgree) {
  LoadReport report;
  const Dataset ds = load_coco(fixtures() / "coco_minimal.json", fixtures(), Skeleton::coco17(), report);
  const Bitmap poly = as_bitmap(ds.instances[0].mask(LimbId::kLeftUpperArm)->shape, 20, 16);
  const Bitmap rle = as_bitmap(ds.instances[1].mask(LimbId::kLeftUpperArm)->shape, 20, 16);
  std::size_t same = 0;
  for (int r = 0; r < 16; ++r) {
    for (int c = 0; c < 20; ++c) same += poly.at(r, c) == rle.at(r, c) ? 1 : 0;
  }
  EXPECT_GE(same, static_cast<std::size_t>(0.99 * 320));
  EXPECT_EQ(rle.count(), 48u);
}

TEST(LoadCoco, CorrectionsSwapLimbs) {
  LoadReport report;
  const Dataset plain = load_coco(fixtures() / "coco_minimal.json", fixtures(), Skeleton::coco17(), report);
  const Dataset fixed = load_coco(fixtures() / "coco_minimal.json", fixtures(), Skeleton::coco17(), report,
                                  fixtures() / "corrections.json");
  const PoseInstance& a = plain.instances[0];
  const PoseInstance& b = fixed.instances[0];
  // the shape labeled left thigh now sits on the right thigh and takes its endpoints
  EXPECT_EQ(b.mask(LimbId::kRightThigh)->shape, a.mask(LimbId::kLeftThigh)->shape);
  EXPECT_EQ(b.mask(LimbId::kLeftThigh)->shape, a.mask(LimbId::kRightThigh)->shape);
  EXPECT_EQ(b.mask(LimbId::kRightThigh)->endpoint_a, (Point2{2, 10}));
  EXPECT_NO_THROW(b.validate(fixed.skeleton));
}

TEST(LoadCoco, UnknownLimbNameIsAnError) {
  TempDir dir;
  nlohmann::json doc = nlohmann::json::parse(std::ifstream(fixtures() / "coco_minimal.json"));
  doc["annotations"][0]["limb_masks"][0]["part"] = "left_tail";
  std::ofstream(dir.path() / "bad.json") << doc.dump();
  LoadReport report;
  EXPECT_THROW(load_coco(dir.path() / "bad.json", dir.path(), Skeleton::coco17(), report), DataError);
}

TEST(DensePose, PartMapping) {
  EXPECT_EQ(limb_from_densepose_part(10), LimbId::kLeftUpperArm);
  EXPECT_EQ(limb_from_densepose_part(13), LimbId::kRightForearm);
  EXPECT_EQ(limb_from_densepose_part(6), LimbId::kRightThigh);
  EXPECT_EQ(limb_from_densepose_part(9), LimbId::kLeftLowerLeg);
  EXPECT_FALSE(limb_from_densepose_part(1).has_value());
  EXPECT_FALSE(limb_from_densepose_part(5).has_value());
  EXPECT_FALSE(limb_from_densepose_part(14).has_value());
  std::set<LimbId> all;
  for (int p = 1; p <= 14; ++p) {
    if (auto l = limb_from_densepose_part(p)) all.insert(*l);
  }
  EXPECT_EQ(all.size(), kLimbCount);
}

SyntheticBodySpec two_limb_spec() {
  const Skeleton sk = Skeleton::coco17();
  SyntheticBodySpec s;
  s.noise = 0.0;
  s.keypoints.assign(sk.size(), Point2{24, 32});
  s.visibility.assign(sk.size(), 0);
  auto put = [&](const char* name, Point2 p) {
    s.keypoints[sk.require_index(name)] = p;
    s.visibility[sk.require_index(name)] = 2;
  };
  put("left_shoulder", {8, 20});
  put("left_elbow", {38, 20});
  put("left_wrist", {38, 50});
  s.limbs = {{LimbId::kLeftUpperArm, 4.0, 0.9}, {LimbId::kLeftForearm, 3.0, 0.7}};
  s.seed = 3;
  return s;
}

TEST(Synthetic, CapsuleCrossSectionWidth) {
  const SyntheticInstance syn = generate_synthetic(two_limb_spec(), Skeleton::coco17());
  const BodyPartMask* arm = syn.instance.mask(LimbId::kLeftUpperArm);
  ASSERT_NE(arm, nullptr);
  for (double pb : {0.05, 0.3, 0.5, 0.8, 0.95}) {
    const CrossSection s = cross_section(*arm, pb);
    EXPECT_NEAR(distance(s.side1, s.side2), 8.0, 1e-6);
    const CrossSection c = syn.capsules[0].cross_section(pb);
    EXPECT_NEAR(distance(s.side1, c.side1), 0.0, 1e-6);
    EXPECT_NEAR(distance(s.side2, c.side2), 0.0, 1e-6);
  }
}

TEST(Synthetic, DeterministicAndKeypointsOnBrightPixels) {
  const Skeleton sk = Skeleton::coco17();
  const SyntheticInstance a = generate_synthetic(two_limb_spec(), sk);
  const SyntheticInstance b = generate_synthetic(two_limb_spec(), sk);
  EXPECT_EQ(a.image.data, b.image.data);
  EXPECT_EQ(instance_to_json(a.instance), instance_to_json(b.instance));
  for (std::size_t k = 0; k < sk.size(); ++k) {
    if (a.instance.visibility[k] == 0) continue;
    const Point2 p = a.instance.keypoints[k];
    const int r = std::min(static_cast<int>(p.y), 63);
    const int c = std::min(static_cast<int>(p.x), 47);
    EXPECT_GT(a.image.at(r, c), 150) << sk.keypoints[k];
  }
}

TEST(Synthetic, RandomBodiesAreValid) {
  const Skeleton sk = Skeleton::coco17();
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    SyntheticBodySpec spec = random_body_spec(SyntheticLayout{}, sk, rng);
    spec.seed = static_cast<std::uint64_t>(i);
    const SyntheticInstance syn = generate_synthetic(spec, sk);
    EXPECT_NO_THROW(syn.instance.validate(sk));
    EXPECT_EQ(syn.instance.masks.size(), kLimbCount);
    for (std::size_t m = 0; m < syn.capsules.size(); ++m) {
      const CrossSection exact = syn.capsules[m].cross_section(0.5);
      const CrossSection poly = cross_section(syn.instance.masks[m], 0.5);
      EXPECT_LT(distance(exact.side1, poly.side1), 1e-6);
      EXPECT_LT(distance(exact.side2, poly.side2), 1e-6);
    }
  }
  SyntheticBodySpec bad = two_limb_spec();
  bad.limbs[0].half_width = 1.5;
  EXPECT_THROW(generate_synthetic(bad, sk), DomainError);
}

TEST(Split, Partition) {
  const Split all = split(10, {1, 0, 0}, 4);
  EXPECT_EQ(all.train.size(), 10u);
  EXPECT_TRUE(all.val.empty() && all.test.empty());
  const Split a = split(100, {0.7, 0.1, 0.2}, 9);
  const Split b = split(100, {0.7, 0.1, 0.2}, 9);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.train.size() + a.val.size() + a.test.size(), 100u);
  std::set<std::size_t> seen(a.train.begin(), a.train.end());
  seen.insert(a.val.begin(), a.val.end());
  seen.insert(a.test.begin(), a.test.end());
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_NE(split(100, {0.7, 0.1, 0.2}, 10).train, a.train);
  EXPECT_THROW(split(10, {0.5, 0.2, 0.2}, 1), DomainError);
  EXPECT_THROW(split(10, {1.2, -0.2, 0}, 1), DomainError);
}

TEST(EvalGrid, Counts) {
  const auto grid = make_eval_grid(kAllLimbs, 4, 5);
  EXPECT_EQ(grid.size(), 160u);
  for (const LimbKeypointSpec& s : grid) {
    EXPECT_NO_THROW(s.validate());
    EXPECT_GT(s.line_fraction, 0.0);
    EXPECT_LT(s.line_fraction, 1.0);
  }
  EXPECT_EQ(grid[0].signed_thickness, -1.0);
  EXPECT_EQ(grid[4].signed_thickness, 1.0);
  EXPECT_DOUBLE_EQ(grid[0].line_fraction, 0.2);
  for (const LimbKeypointSpec& s : make_eval_grid(kAllLimbs, 3, 1)) EXPECT_EQ(s.signed_thickness, 0.0);
}

TEST(InstanceFormat, RoundTrip) {
  TempDir dir;
  const Skeleton sk = Skeleton::coco17();
  Dataset ds;
  ds.skeleton = sk;
  ds.image_root = dir.path();
  Rng rng(2);
  for (int i = 0; i < 3; ++i) {
    SyntheticBodySpec spec = random_body_spec(SyntheticLayout{}, sk, rng);
    PoseInstance inst = generate_synthetic(spec, sk).instance;
    inst.id = "synth" + std::to_string(i);
    inst.image = inst.id + ".png";
    ds.instances.push_back(inst);
  }
  // bitmap and polygon masks both survive
  LoadReport report;
  const Dataset coco = load_coco(fixtures() / "coco_minimal.json", fixtures(), sk, report);
  ds.instances.push_back(coco.instances[1]);
  ds.instances.back().generated.push_back({{LimbId::kLeftUpperArm, 0.5, 0.25}, {8, 6.5}});

  save_dataset(dir.path() / "ds.json", ds);
  const Dataset back = load_dataset(dir.path() / "ds.json");
  ASSERT_EQ(back.instances.size(), ds.instances.size());
  for (std::size_t i = 0; i < ds.instances.size(); ++i) {
    EXPECT_EQ(instance_to_json(back.instances[i]), instance_to_json(ds.instances[i]));
  }
  save_dataset(dir.path() / "again.json", back);
  std::ifstream x(dir.path() / "ds.json");
  std::ifstream y(dir.path() / "again.json");
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(x), {}), std::string(std::istreambuf_iterator<char>(y), {}));
}

TEST(InstanceFormat, InvariantViolations) {
  const Skeleton sk = Skeleton::coco17();
  PoseInstance p = generate_synthetic(two_limb_spec(), sk).instance;
  PoseInstance out_of_frame = p;
  out_of_frame.keypoints[sk.require_index("left_wrist")] = {90, 10};
  EXPECT_THROW(out_of_frame.validate(sk), DataError);
  PoseInstance moved = p;
  moved.masks[0].endpoint_a = {0, 0};
  EXPECT_THROW(moved.validate(sk), DataError);
}

}  // namespace
}  // namespace limbpose
