// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "limbpose/cli.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <fstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "limbpose/errors.hpp"
#include "limbpose/json_util.hpp"
#include "limbpose/model/predict.hpp"
#include "limbpose/render.hpp"
#include "limbpose/synthetic.hpp"

namespace limbpose {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCheckpointName = "checkpoint.bin";

fs::path out_dir(const json& config) {
  const fs::path out = json_get<std::string>(config, "out", "run");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw DataError("cannot create output directory " + out.string() + ": " + ec.message());
  return out;
}

std::uint64_t require_seed(const json& config) {
  if (!config.contains("seed")) throw ConfigError("run: 'seed' is mandatory");
  return json_get<std::uint64_t>(config, "seed", "run");
}

Skeleton skeleton_from(const json& value) {
  if (value.is_string()) return Skeleton::load(value.get<std::string>());
  return Skeleton::from_json(value);
}

std::optional<NormPoseTemplate> norm_pose_from(const json& config, const Skeleton& skeleton) {
  if (config.contains("norm_pose")) return NormPoseTemplate::from_json(config["norm_pose"], skeleton);
  if (config.contains("skeleton") && config["skeleton"].is_string()) {
    const std::string name = config["skeleton"].get<std::string>();
    if (fs::exists(name)) {
      const json doc = read_json_file(name);
      if (doc.contains("norm_pose")) return NormPoseTemplate::from_json(doc["norm_pose"], skeleton);
    }
  }
  return std::nullopt;
}

std::vector<std::size_t> read_split(const fs::path& dataset_file, const std::string& split, std::size_t count) {
  std::vector<std::size_t> indices;
  if (split == "all") {
    for (std::size_t i = 0; i < count; ++i) indices.push_back(i);
    return indices;
  }
  const fs::path splits = dataset_file.parent_path() / "splits.json";
  if (!fs::exists(splits)) throw DataError("split '" + split + "' requested but " + splits.string() + " is missing");
  const json doc = read_json_file(splits);
  if (!doc.contains(split)) throw DataError(splits.string() + ": no split '" + split + "'");
  for (const auto& v : doc[split]) {
    const auto i = v.get<std::size_t>();
    if (i >= count) throw DataError(splits.string() + ": index " + std::to_string(i) + " out of range");
    indices.push_back(i);
  }
  return indices;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw DataError("cannot write " + path.string());
}

json report_summary(const EvalReport& r) {
  json j = r.to_json();
  j.erase("oks_per_instance");
  return j;
}

std::unique_ptr<Predictor> make_predictor(const json& config, std::optional<Trainer>& trainer) {
  const std::string kind = config.value("predictor", std::string("model"));
  if (kind == "groundtruth") return std::make_unique<GroundTruthPredictor>();
  if (kind != "model") throw ConfigError("run: predictor must be 'model' or 'groundtruth'");
  if (!config.contains("checkpoint")) throw ConfigError("run: 'checkpoint' is required for the model predictor");
  const fs::path ckpt = json_get<std::string>(config, "checkpoint", "run");
  if (!fs::exists(ckpt)) throw DataError("missing checkpoint " + ckpt.string());
  trainer.emplace(Trainer::load_checkpoint(ckpt));
  return std::make_unique<ModelPredictor>(trainer->model(), trainer->parameters(), trainer->encoder());
}

std::pair<int, int> input_size(const json& config, const std::optional<Trainer>& trainer) {
  if (trainer) return {trainer->model().config().image_width, trainer->model().config().image_height};
  const auto hw = json_get_or(config, "input_size", std::array<int, 2>{64, 48}, "run");
  return {hw[1], hw[0]};
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitUsage;
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  return kExitData;
}

std::pair<int, int> parse_grid(std::string_view text) {
  const auto x = text.find_first_of("xX");
  int rows = 0;
  int cols = 0;
  try {
    if (x == std::string_view::npos) throw std::invalid_argument("no separator");
    std::size_t used = 0;
    rows = std::stoi(std::string(text.substr(0, x)), &used);
    if (used != x) throw std::invalid_argument("rows");
    const std::string rest(text.substr(x + 1));
    cols = std::stoi(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("cols");
  } catch (const std::exception&) {
    throw ConfigError("bad grid '" + std::string(text) + "' (expected ROWSxCOLS)");
  }
  if (rows < 1 || cols < 1) throw ConfigError("grid dimensions must be positive");
  return {rows, cols};
}

json apply_overrides(json config, const CliOverrides& o) {
  if (!config.is_object()) throw ConfigError("run config must be a JSON object");
  if (o.seed) config["seed"] = *o.seed;
  if (o.out) config["out"] = o.out->string();
  if (o.pct_threshold) config["pct_thresholds"] = json::array({*o.pct_threshold});
  if (o.pck_threshold) config["pck_threshold"] = *o.pck_threshold;
  if (o.grid) config["grid"] = {o.grid->first, o.grid->second};
  if (o.embedder) {
    embedder_from_name(*o.embedder);
    config["model"]["embedder"] = *o.embedder;
  }
  return config;
}

OutputLock::OutputLock(const fs::path& dir) : path_(dir / ".limbpose.lock") {
  fd_ = ::open(path_.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
  if (fd_ < 0) throw DataError("cannot create lock file " + path_.string());
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw ConfigError("another limbpose process is using " + dir.string());
  }
}

OutputLock::~OutputLock() {
  if (fd_ < 0) return;
  std::error_code ec;
  fs::remove(path_, ec);
  ::flock(fd_, LOCK_UN);
  ::close(fd_);
}

LoadedSplit load_split(const json& config, const std::string& split, int input_width, int input_height) {
  LoadedSplit out;
  fs::path dataset_file;
  if (config.contains("coco")) {
    const json& c = config["coco"];
    reject_unknown_keys(c, {"annotations", "image_root", "skeleton", "corrections"}, "coco");
    const Skeleton skeleton = skeleton_from(c.value("skeleton", json("coco17")));
    std::optional<json> corrections;
    if (c.contains("corrections")) corrections = read_json_file(json_get<std::string>(c, "corrections", "coco"));
    LoadReport report;
    dataset_file = json_get<std::string>(c, "annotations", "coco");
    out.dataset = load_coco(dataset_file, json_get<std::string>(c, "image_root", "coco"), skeleton, report,
                            corrections);
    spdlog::info("coco: loaded {} instances, skipped {}", report.loaded, report.skipped);
    for (const auto& e : report.errors) spdlog::debug("coco: {}", e);
    if (split != "all") throw ConfigError("coco input only supports split 'all'");
  } else {
    dataset_file = json_get<std::string>(config, "dataset", "run");
    out.dataset = load_dataset(dataset_file);
  }
  out.indices = read_split(dataset_file, split, out.dataset.instances.size());
  for (std::size_t i : out.indices) {
    const PoseInstance& inst = out.dataset.instances[i];
    const Image image = read_png(out.dataset.image_path(inst), 1);
    const FittedSample fitted = fit_to_input(inst, image, input_width, input_height, out.dataset.skeleton);
    TrainSample s;
    s.image = Eigen::Map<const Mat<float>>(fitted.pixels.data(), input_height, input_width);
    s.instance = fitted.instance;
    s.transform = fitted.transform;
    out.samples.push_back(std::move(s));
  }
  return out;
}

void cmd_synth(const json& config) {
  reject_unknown_keys(config, {"seed", "out", "count", "skeleton", "width", "height", "noise", "split"}, "synth");
  const std::uint64_t seed = require_seed(config);
  const auto count = json_get_or(config, "count", 100, "synth");
  if (count < 0) throw ConfigError("synth: count must be non-negative");
  const Skeleton skeleton = skeleton_from(config.value("skeleton", json("coco17")));
  SyntheticLayout layout;
  layout.width = json_get_or(config, "width", layout.width, "synth");
  layout.height = json_get_or(config, "height", layout.height, "synth");
  layout.noise = json_get_or(config, "noise", layout.noise, "synth");
  const auto fractions = json_get_or(config, "split", std::array<double, 3>{0.8, 0.1, 0.1}, "synth");
  if (layout.width < 16 || layout.height < 16) throw ConfigError("synth: images must be at least 16x16");

  const fs::path out = out_dir(config);
  OutputLock lock(out);
  fs::create_directories(out / "images");
  Rng rng(seed);
  Dataset ds;
  ds.skeleton = skeleton;
  ds.image_root = out;
  for (int i = 0; i < count; ++i) {
    const SyntheticInstance syn = generate_synthetic(random_body_spec(layout, skeleton, rng), skeleton);
    PoseInstance inst = syn.instance;
    inst.id = fmt::format("synth{:06d}", i);
    inst.image = fmt::format("images/{}.png", inst.id);
    write_png(out / inst.image, syn.image);
    ds.instances.push_back(std::move(inst));
  }
  save_dataset(out / "dataset.json", ds);
  const Split parts = split(static_cast<std::size_t>(count), fractions, seed);
  write_json_file(out / "splits.json", {{"seed", seed}, {"train", parts.train}, {"val", parts.val}, {"test", parts.test}});
  spdlog::info("synth: wrote {} instances to {}", count, out.string());
}

void cmd_generate(const json& config) {
  reject_unknown_keys(config, {"seed", "out", "dataset", "per_instance", "sigma"}, "generate");
  const std::uint64_t seed = require_seed(config);
  const auto per_instance = json_get_or(config, "per_instance", 5, "generate");
  const auto sigma = json_get_or(config, "sigma", 1.0, "generate");
  if (per_instance < 0) throw ConfigError("generate: per_instance must be non-negative");
  if (!(sigma > 0.0)) throw ConfigError("generate: sigma must be positive");
  const fs::path source = json_get<std::string>(config, "dataset", "generate");
  Dataset ds = load_dataset(source);

  const fs::path out = out_dir(config);
  OutputLock lock(out);
  Rng rng(seed);
  std::size_t skipped_instances = 0;
  std::size_t failed = 0;
  for (PoseInstance& inst : ds.instances) {
    inst.generated.clear();
    if (inst.masks.empty()) {
      ++skipped_instances;
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, inst.masks.size() - 1);
    for (int k = 0; k < per_instance; ++k) {
      try {
        const SampledKeypoint s = sample_keypoint(inst.masks[pick(rng)], rng, sigma);
        inst.generated.push_back({s.spec, s.point});
      } catch (const GenerationFailed&) {
        ++failed;
      }
    }
  }
  // keep image paths valid relative to the new file
  const fs::path root = fs::absolute(ds.image_root);
  for (PoseInstance& inst : ds.instances) {
    if (!fs::path(inst.image).is_absolute()) inst.image = (root / inst.image).lexically_normal().string();
  }
  save_dataset(out / "generated.json", ds);
  spdlog::info("generate: {} instances, {} skipped without masks, {} failed samples", ds.instances.size(),
               skipped_instances, failed);
}

void cmd_train(const json& config, const std::optional<fs::path>& resume) {
  reject_unknown_keys(config,
                      {"seed", "out", "dataset", "coco", "split", "val_split", "model", "train", "norm_pose",
                       "grid", "pct_thresholds", "pck_threshold"},
                      "train run");
  const std::uint64_t seed = require_seed(config);
  const fs::path out = out_dir(config);
  OutputLock lock(out);

  std::optional<Trainer> trainer;
  if (resume) {
    const fs::path ckpt = resume->empty() ? out / kCheckpointName : *resume;
    if (!fs::exists(ckpt)) throw DataError("cannot resume: missing checkpoint " + ckpt.string());
    trainer.emplace(Trainer::load_checkpoint(ckpt));
    spdlog::info("train: resumed from {} at step {}", ckpt.string(), trainer->step());
  } else {
    json model_json = config.value("model", json::object());
    json train_json = config.value("train", json::object());
    model_json["seed"] = seed;
    train_json["seed"] = seed;
    Dataset probe = config.contains("dataset") ? load_dataset(json_get<std::string>(config, "dataset", "train run"))
                                               : Dataset{};
    if (config.contains("coco")) probe.skeleton = skeleton_from(config["coco"].value("skeleton", json("coco17")));
    if (!model_json.contains("num_keypoints")) model_json["num_keypoints"] = probe.skeleton.size();
    const ModelConfig mc = ModelConfig::from_json(model_json);
    const TrainConfig tc = TrainConfig::from_json(train_json);
    trainer.emplace(mc, tc, KeypointEncoder(mc, probe.skeleton, norm_pose_from(config, probe.skeleton)));
  }
  const ModelConfig& mc = trainer->model().config();
  const TrainConfig& tc = trainer->train_config();
  const LoadedSplit train_set = load_split(config, config.value("split", std::string("train")), mc.image_width,
                                           mc.image_height);
  if (train_set.samples.empty()) throw DomainError("train: the training split is empty");
  std::optional<LoadedSplit> val_set;
  if (tc.eval_every > 0 && config.value("val_split", std::string("val")) != "none") {
    val_set = load_split(config, config.value("val_split", std::string("val")), mc.image_width, mc.image_height);
  }
  const auto grid = json_get_or(config, "grid", std::array<int, 2>{4, 5}, "train run");
  EvalConfig ec;
  ec.pct_thresholds = json_get_or(config, "pct_thresholds", ec.pct_thresholds, "train run");
  ec.pck_threshold = json_get_or(config, "pck_threshold", ec.pck_threshold, "train run");

  write_json_file(out / "run_config.json", config);
  std::ofstream log(out / "train_log.jsonl", resume ? std::ios::app : std::ios::trunc);
  if (!log) throw DataError("cannot write " + (out / "train_log.jsonl").string());
  const auto t0 = std::chrono::steady_clock::now();
  double loss_sum = 0.0;
  int loss_count = 0;
  while (trainer->step() < tc.steps) {
    const StepResult r = trainer->train_step(train_set.samples);
    const int step = trainer->step();
    loss_sum += r.loss;
    ++loss_count;
    const bool last = step == tc.steps;
    if ((tc.log_every > 0 && step % tc.log_every == 0) || last) {
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const json line = {{"step", step},
                         {"loss", loss_sum / loss_count},
                         {"lr", r.learning_rate},
                         {"seed", tc.seed},
                         {"skipped", r.skipped},
                         {"elapsed_s", elapsed}};
      log << line.dump() << '\n' << std::flush;
      spdlog::info("step {} loss {:.6f} lr {:.3g}", step, loss_sum / loss_count, r.learning_rate);
      loss_sum = 0.0;
      loss_count = 0;
    }
    if (val_set && !val_set->samples.empty() && (step % tc.eval_every == 0 || last)) {
      ModelPredictor predictor(trainer->model(), trainer->parameters(), trainer->encoder());
      const EvalReport report =
          evaluate_predictor(val_set->samples, predictor, trainer->encoder().skeleton(), grid[0], grid[1], ec);
      log << json{{"step", step}, {"seed", tc.seed}, {"val", report_summary(report)}}.dump() << '\n' << std::flush;
      spdlog::info("step {} val mte {:.3f} pck {:.3f}", step, report.mte.value_or(2.0), report.pck_fixed);
    }
    if (tc.checkpoint_every > 0 && step % tc.checkpoint_every == 0) trainer->save_checkpoint(out / kCheckpointName);
  }
  trainer->save_checkpoint(out / kCheckpointName);
  spdlog::info("train: checkpoint at step {} written to {}", trainer->step(), (out / kCheckpointName).string());
}

void cmd_eval(const json& config) {
  reject_unknown_keys(config,
                      {"seed", "out", "dataset", "coco", "split", "checkpoint", "predictor", "grid", "pct_thresholds",
                       "pck_threshold", "oks", "input_size"},
                      "eval");
  require_seed(config);
  std::optional<Trainer> trainer;
  std::unique_ptr<Predictor> predictor = make_predictor(config, trainer);
  const auto [w, h] = input_size(config, trainer);
  const LoadedSplit data = load_split(config, config.value("split", std::string("test")), w, h);
  if (data.samples.empty()) throw DomainError("eval: no instances to evaluate");
  const auto grid = json_get_or(config, "grid", std::array<int, 2>{4, 5}, "eval");
  EvalConfig ec;
  ec.pct_thresholds = json_get_or(config, "pct_thresholds", ec.pct_thresholds, "eval");
  ec.pck_threshold = json_get_or(config, "pck_threshold", ec.pck_threshold, "eval");
  if (json_get_or(config, "oks", true, "eval")) ec.oks_constants = data.dataset.skeleton.oks_constants;

  const fs::path out = out_dir(config);
  OutputLock lock(out);
  const EvalReport report = evaluate_predictor(data.samples, *predictor, data.dataset.skeleton, grid[0], grid[1], ec);
  write_json_file(out / "report.json", report.to_json());
  write_text(out / "report.txt", report.to_table());
  spdlog::info("eval: {} instances\n{}", data.samples.size(), report.to_table());
}

void cmd_render(const json& config) {
  reject_unknown_keys(config,
                      {"seed", "out", "dataset", "coco", "split", "checkpoint", "predictor", "mode", "grid", "darken",
                       "scale", "limit", "isoline_samples", "input_size"},
                      "render");
  require_seed(config);
  RenderOptions opt;
  const std::string mode = config.value("mode", std::string("grid"));
  if (mode == "grid") {
    opt.mode = RenderMode::kGrid;
  } else if (mode == "isolines") {
    opt.mode = RenderMode::kIsolines;
  } else {
    throw ConfigError("render: mode must be 'grid' or 'isolines'");
  }
  const auto grid = json_get_or(config, "grid", std::array<int, 2>{4, 5}, "render");
  if (grid[0] < 1 || grid[1] < 1) throw ConfigError("render: grid dimensions must be positive");
  opt.grid_rows = grid[0];
  opt.grid_cols = grid[1];
  opt.darken = json_get_or(config, "darken", opt.darken, "render");
  opt.scale = json_get_or(config, "scale", opt.scale, "render");
  opt.isoline_samples = json_get_or(config, "isoline_samples", opt.isoline_samples, "render");
  if (!(opt.darken >= 0.0 && opt.darken <= 1.0)) throw ConfigError("render: darken must lie in [0, 1]");
  if (opt.scale < 1 || opt.scale > 32) throw ConfigError("render: scale must lie in [1, 32]");
  if (opt.isoline_samples < 2) throw ConfigError("render: isoline_samples must be at least 2");
  const auto limit = json_get_or(config, "limit", 0, "render");

  std::optional<Trainer> trainer;
  std::unique_ptr<Predictor> predictor = make_predictor(config, trainer);
  const auto [w, h] = input_size(config, trainer);
  const LoadedSplit data = load_split(config, config.value("split", std::string("test")), w, h);
  const fs::path out = out_dir(config);
  OutputLock lock(out);
  std::size_t n = data.samples.size();
  if (limit > 0) n = std::min(n, static_cast<std::size_t>(limit));
  for (std::size_t i = 0; i < n; ++i) {
    const PoseInstance& inst = data.dataset.instances[data.indices[i]];
    const Image image = read_png(data.dataset.image_path(inst), 3);
    const Overlay overlay = build_overlay(data.samples[i], *predictor, opt);
    const std::string stem = inst.id.empty() ? fmt::format("instance{:06d}", data.indices[i]) : inst.id;
    write_png(out / (stem + ".png"), draw_overlay(image, overlay, opt));
    write_png(out / (stem + ".background.png"), to_rgb(darken(image, opt.darken)));
    write_text(out / (stem + ".svg"), overlay_svg(overlay, image.width, image.height, opt, stem + ".background.png"));
  }
  spdlog::info("render: wrote {} overlays to {}", n, out.string());
}

int run_cli(int argc, char** argv) {
  auto logger = spdlog::get("limbpose");
  if (!logger) logger = spdlog::stderr_color_mt("limbpose");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  if (const char* level = std::getenv("LIMBPOSE_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  } else {
    spdlog::set_level(spdlog::level::info);
  }

  CLI::App app{"limbpose: arbitrary keypoints on limbs"};
  app.require_subcommand(1);
  std::string config_path;
  std::string grid_text;
  std::optional<std::string> resume_text;
  CliOverrides o;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "override the config seed");
    cmd->add_option("--out", o.out, "output directory");
  };
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic capsule dataset");
  CLI::App* generate = app.add_subcommand("generate", "sample arbitrary limb keypoints per instance");
  CLI::App* train = app.add_subcommand("train", "train a model");
  CLI::App* eval = app.add_subcommand("eval", "evaluate predictions on a split");
  CLI::App* render = app.add_subcommand("render", "draw predicted grids or iso-thickness lines");
  for (CLI::App* cmd : {synth, generate, train, eval, render}) add_common(cmd);
  train->add_option("--embedder", o.embedder, "vectorized|thickness-baseline|normpose-linear|normpose-mlp");
  train->add_option("--resume", resume_text, "continue from a checkpoint (default <out>/checkpoint.bin)")
      ->expected(0, 1);
  for (CLI::App* cmd : {train, eval}) {
    cmd->add_option("--pct-threshold", o.pct_threshold, "PCT threshold");
    cmd->add_option("--pck-threshold", o.pck_threshold, "PCK threshold (fraction of torso size)");
  }
  for (CLI::App* cmd : {train, eval, render}) cmd->add_option("--grid", grid_text, "evaluation grid ROWSxCOLS");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!grid_text.empty()) o.grid = parse_grid(grid_text);
    json config;
    try {
      config = read_json_file(config_path);
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
    config = apply_overrides(std::move(config), o);
    if (synth->parsed()) cmd_synth(config);
    if (generate->parsed()) cmd_generate(config);
    if (train->parsed()) {
      std::optional<fs::path> resume;
      if (train->count("--resume") > 0) resume = resume_text.value_or(std::string());
      cmd_train(config, resume);
    }
    if (eval->parsed()) cmd_eval(config);
    if (render->parsed()) cmd_render(config);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e);
  }
  return kExitOk;
}

}  // namespace limbpose
