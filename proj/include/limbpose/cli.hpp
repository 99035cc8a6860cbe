// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "limbpose/model/trainer.hpp"

namespace limbpose {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

/// "4x5" -> (4, 5).
std::pair<int, int> parse_grid(std::string_view text);

/// Flag values layered over the config file.
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<double> pct_threshold;
  std::optional<double> pck_threshold;
  std::optional<std::pair<int, int>> grid;
  std::optional<std::string> embedder;
  std::optional<std::filesystem::path> resume;  // empty path = <out>/checkpoint.bin
};

nlohmann::json apply_overrides(nlohmann::json config, const CliOverrides& overrides);

/// Holds an exclusive lock on <dir>/.limbpose.lock for the object's lifetime.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

/// Samples of a dataset split fitted to the model input.
struct LoadedSplit {
  Dataset dataset;
  std::vector<std::size_t> indices;  // into dataset.instances
  std::vector<TrainSample> samples;
};

/// Reads "dataset" (instance file) or "coco" ({annotations, image_root,
/// skeleton, corrections}) and the named split ("all" or a key of
/// splits.json next to the instance file).
LoadedSplit load_split(const nlohmann::json& config, const std::string& split, int input_width, int input_height);

// Each command reads a validated run config (after overrides) and writes
// into config["out"]. Errors are thrown.
void cmd_synth(const nlohmann::json& config);
void cmd_generate(const nlohmann::json& config);
void cmd_train(const nlohmann::json& config, const std::optional<std::filesystem::path>& resume = {});
void cmd_eval(const nlohmann::json& config);
void cmd_render(const nlohmann::json& config);

/// Full command line: `limbpose <command> --config <path> [flags]`.
int run_cli(int argc, char** argv);

}  // namespace limbpose
