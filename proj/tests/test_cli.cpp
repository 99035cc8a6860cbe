// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "limbpose/cli.hpp"
#include "limbpose/errors.hpp"
#include "limbpose/json_util.hpp"
#include "limbpose/metrics.hpp"

namespace limbpose {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::size_t occurrences(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

std::vector<json> read_log(const fs::path& p) {
  std::vector<json> lines;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) lines.push_back(json::parse(line));
  return lines;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("limbpose_cli_" + std::to_string(::getpid()));
    fs::create_directories(root_);
    cmd_synth({{"seed", 3}, {"out", (root_ / "synth").string()}, {"count", 24}});
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static fs::path dataset() { return root_ / "synth" / "dataset.json"; }

  static json train_config(const fs::path& out, int steps) {
    return {{"seed", 5},
            {"out", out.string()},
            {"dataset", dataset().string()},
            {"model", {{"embed_dim", 32}, {"heads", 2}, {"head_hidden", 64}}},
            {"train", {{"steps", steps}, {"batch_size", 4}, {"warmup_steps", 5}, {"log_every", 10}}}};
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "limbpose");
    std::vector<char*> argv;
    for (std::string& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
  }

  static fs::path root_;
};

fs::path Cli::root_;

TEST_F(Cli, SynthIsReproducible) {
  cmd_synth({{"seed", 3}, {"out", (root_ / "synth_again").string()}, {"count", 24}});
  EXPECT_EQ(slurp(root_ / "synth" / "dataset.json"), slurp(root_ / "synth_again" / "dataset.json"));
  EXPECT_EQ(slurp(root_ / "synth" / "splits.json"), slurp(root_ / "synth_again" / "splits.json"));
  EXPECT_EQ(slurp(root_ / "synth" / "images" / "synth000007.png"),
            slurp(root_ / "synth_again" / "images" / "synth000007.png"));
  const json splits = read_json_file(root_ / "synth" / "splits.json");
  EXPECT_EQ(splits["train"].size() + splits["val"].size() + splits["test"].size(), 24u);
}

TEST_F(Cli, SynthOfNothing) {
  cmd_synth({{"seed", 1}, {"out", (root_ / "empty").string()}, {"count", 0}});
  EXPECT_TRUE(read_json_file(root_ / "empty" / "dataset.json")["instances"].empty());
  // evaluating an empty split is a data error
  const json eval = {{"seed", 1},
                     {"out", (root_ / "empty_eval").string()},
                     {"dataset", (root_ / "empty" / "dataset.json").string()},
                     {"split", "all"},
                     {"predictor", "groundtruth"}};
  EXPECT_THROW(cmd_eval(eval), DomainError);
  std::ofstream(root_ / "empty_eval.json") << eval.dump();
  EXPECT_EQ(run({"eval", "--config", (root_ / "empty_eval.json").string()}), kExitData);
}

TEST_F(Cli, GenerateAddsKeypoints) {
  cmd_generate({{"seed", 2}, {"out", (root_ / "gen").string()}, {"dataset", dataset().string()}, {"per_instance", 5}});
  const Dataset ds = load_dataset(root_ / "gen" / "generated.json");
  ASSERT_EQ(ds.instances.size(), 24u);
  for (const PoseInstance& p : ds.instances) {
    EXPECT_EQ(p.generated.size(), 5u);
    EXPECT_TRUE(fs::exists(ds.image_path(p)));
    for (const GeneratedKeypoint& g : p.generated) {
      const BodyPartMask* m = p.mask(g.spec.limb);
      ASSERT_NE(m, nullptr);
      EXPECT_LT(distance(realize_keypoint(*m, g.spec), g.point), 1e-9);
    }
  }
}

TEST_F(Cli, TrainSmokeEvalAndResume) {
  const fs::path out = root_ / "train";
  const auto t0 = std::chrono::steady_clock::now();
  cmd_train(train_config(out, 50));
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 60.0);
  const auto log = read_log(out / "train_log.jsonl");
  ASSERT_EQ(log.size(), 5u);
  EXPECT_EQ(log.front()["step"], 10);
  EXPECT_EQ(log.back()["step"], 50);
  EXPECT_EQ(log.back()["seed"], 5);
  EXPECT_LT(log.back()["loss"].get<double>(), log.front()["loss"].get<double>());
  ASSERT_TRUE(fs::exists(out / "checkpoint.bin"));
  EXPECT_EQ(read_json_file(out / "run_config.json")["seed"], 5);

  const json eval = {{"seed", 5},
                     {"out", (root_ / "eval").string()},
                     {"dataset", dataset().string()},
                     {"checkpoint", (out / "checkpoint.bin").string()}};
  cmd_eval(eval);
  const EvalReport r = EvalReport::from_json(read_json_file(root_ / "eval" / "report.json"));
  EXPECT_TRUE(r.mte.has_value());
  EXPECT_GT(r.counts.generated_keypoints, 0u);
  EXPECT_NE(slurp(root_ / "eval" / "report.txt").find("MTE"), std::string::npos);

}

TEST_F(Cli, ResumeMatchesStraightRun) {
  // constant learning rate after warmup, so the step budget does not shape the schedule
  auto config = [](const fs::path& out, int steps) {
    json c = train_config(out, steps);
    c["train"]["cosine_decay"] = false;
    return c;
  };
  cmd_train(config(root_ / "straight", 20));
  cmd_train(config(root_ / "partial", 12));
  CheckpointData data = read_checkpoint(root_ / "partial" / "checkpoint.bin");
  data.header["train"]["steps"] = 20;
  write_checkpoint(root_ / "partial" / "checkpoint.bin", data);
  cmd_train(config(root_ / "partial", 20), fs::path());
  EXPECT_EQ(slurp(root_ / "partial" / "checkpoint.bin"), slurp(root_ / "straight" / "checkpoint.bin"));
  const auto log = read_log(root_ / "partial" / "train_log.jsonl");
  EXPECT_EQ(log.back()["step"], 20);
}

TEST_F(Cli, GroundTruthEvalIsPerfect) {
  cmd_eval({{"seed", 1},
            {"out", (root_ / "gt").string()},
            {"dataset", dataset().string()},
            {"split", "all"},
            {"predictor", "groundtruth"},
            {"pct_thresholds", {0.1, 0.2}}});
  const EvalReport r = EvalReport::from_json(read_json_file(root_ / "gt" / "report.json"));
  EXPECT_NEAR(*r.mte, 0.0, 1e-9);
  EXPECT_EQ(r.pct_at.at(0.1), 1.0);
  EXPECT_EQ(r.pck_fixed, 1.0);
  EXPECT_EQ(r.pck_full, 1.0);
  EXPECT_EQ(r.ap->ap, 1.0);
  EXPECT_EQ(r.counts.instances, 24u);
}

TEST_F(Cli, RenderOverlays) {
  const json base = {{"seed", 1}, {"dataset", dataset().string()}, {"split", "all"},
                     {"predictor", "groundtruth"}, {"limit", 2}};
  json grid = base;
  grid["out"] = (root_ / "render_grid").string();
  cmd_render(grid);
  const std::string svg = slurp(root_ / "render_grid" / "synth000000.svg");
  EXPECT_EQ(occurrences(svg, "<circle"), 8u * 20u);
  EXPECT_TRUE(fs::exists(root_ / "render_grid" / "synth000000.png"));
  EXPECT_TRUE(fs::exists(root_ / "render_grid" / "synth000000.background.png"));
  EXPECT_FALSE(fs::exists(root_ / "render_grid" / "synth000002.svg"));

  json iso = base;
  iso["out"] = (root_ / "render_iso").string();
  iso["mode"] = "isolines";
  cmd_render(iso);
  EXPECT_EQ(occurrences(slurp(root_ / "render_iso" / "synth000001.svg"), "<polyline"), 8u * 9u);

  json bad = base;
  bad["out"] = (root_ / "render_bad").string();
  bad["mode"] = "heat";
  EXPECT_THROW(cmd_render(bad), ConfigError);
}

TEST_F(Cli, ExitCodes) {
  const fs::path cfg = root_ / "cfg_missing_seed.json";
  std::ofstream(cfg) << json{{"out", (root_ / "x").string()}, {"count", 1}}.dump();
  EXPECT_EQ(run({"synth", "--config", cfg.string()}), kExitUsage);
  EXPECT_EQ(run({"synth", "--config", cfg.string(), "--seed", "4"}), kExitOk);
  EXPECT_EQ(run({"synth"}), kExitUsage);
  EXPECT_EQ(run({"bogus"}), kExitUsage);

  const fs::path unknown = root_ / "cfg_unknown.json";
  std::ofstream(unknown) << json{{"seed", 1}, {"out", (root_ / "y").string()}, {"colour", "red"}}.dump();
  EXPECT_EQ(run({"synth", "--config", unknown.string()}), kExitUsage);

  const fs::path tcfg = root_ / "cfg_train.json";
  std::ofstream(tcfg) << train_config(root_ / "z", 1).dump();
  EXPECT_EQ(run({"train", "--config", tcfg.string(), "--embedder", "fancy"}), kExitUsage);
  EXPECT_EQ(run({"train", "--config", tcfg.string(), "--grid", "4by5"}), kExitUsage);
  EXPECT_EQ(run({"train", "--config", tcfg.string(), "--resume", (root_ / "nope.bin").string()}), kExitData);

  const fs::path ecfg = root_ / "cfg_eval.json";
  std::ofstream(ecfg) << json{{"seed", 1}, {"out", (root_ / "w").string()}, {"dataset", dataset().string()},
                              {"checkpoint", (root_ / "nope.bin").string()}}
                             .dump();
  EXPECT_EQ(run({"eval", "--config", ecfg.string()}), kExitData);

  EXPECT_EQ(exit_code_for(NumericError("nan")), kExitNumeric);
  EXPECT_EQ(exit_code_for(ConfigError("bad")), kExitUsage);
  EXPECT_EQ(exit_code_for(DataError("bad")), kExitData);
}

TEST_F(Cli, Overrides) {
  EXPECT_EQ(parse_grid("4x5"), (std::pair<int, int>{4, 5}));
  EXPECT_EQ(parse_grid("2X3"), (std::pair<int, int>{2, 3}));
  EXPECT_THROW(parse_grid("0x3"), ConfigError);
  EXPECT_THROW(parse_grid("4x"), ConfigError);
  CliOverrides o;
  o.seed = 9;
  o.pct_threshold = 0.1;
  o.grid = std::pair<int, int>{2, 2};
  o.embedder = "normpose-mlp";
  const json c = apply_overrides({{"seed", 1}, {"model", {{"embed_dim", 16}}}}, o);
  EXPECT_EQ(c["seed"], 9);
  EXPECT_EQ(c["pct_thresholds"], json::array({0.1}));
  EXPECT_EQ(c["grid"], json::array({2, 2}));
  EXPECT_EQ(c["model"]["embedder"], "normpose-mlp");
  EXPECT_EQ(c["model"]["embed_dim"], 16);
}

TEST_F(Cli, OutputDirectoryLock) {
  const fs::path dir = root_ / "locked";
  fs::create_directories(dir);
  {
    OutputLock held(dir);
    EXPECT_THROW(OutputLock second(dir), ConfigError);
    EXPECT_THROW(cmd_synth({{"seed", 1}, {"out", dir.string()}, {"count", 1}}), ConfigError);
  }
  EXPECT_FALSE(fs::exists(dir / ".limbpose.lock"));
  EXPECT_NO_THROW(OutputLock again(dir));
}

}  // namespace
}  // namespace limbpose
