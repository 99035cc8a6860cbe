// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "limbpose/dataset.hpp"
#include "limbpose/model/transformer.hpp"
#include "limbpose/representation.hpp"

namespace limbpose {

struct TrainConfig {
  int steps = 5000;
  int batch_size = 8;
  double learning_rate = 4e-3;
  int warmup_steps = 200;
  bool cosine_decay = true;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int arbitrary_keypoints = 16;  // drawn per image before subsampling
  int min_keypoints = 24;
  int max_keypoints = 24;
  double thickness_sigma = 1.0;
  int log_every = 50;
  int eval_every = 0;  // 0 disables periodic validation
  int checkpoint_every = 0;
  std::uint64_t seed = 0;

  void validate() const;
  /// Learning rate used by the 0-based step.
  double learning_rate_at(int step) const;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// One image at model input size with its annotations in input coordinates.
struct TrainSample {
  Mat<float> image;
  PoseInstance instance;
  InputTransform transform;  // source image -> model input
};

TrainSample to_train_sample(const FittedSample& fitted, const ModelConfig& config);

/// Turns keypoint specs into embedder inputs for a fixed skeleton.
class KeypointEncoder {
 public:
  /// Norm-pose embedders fall back to NormPoseTemplate::default_for(skeleton).
  KeypointEncoder(const ModelConfig& config, Skeleton skeleton, std::optional<NormPoseTemplate> norm_pose = {});

  const Skeleton& skeleton() const { return skeleton_; }
  const std::optional<NormPoseTemplate>& norm_pose() const { return norm_pose_; }

  template <typename T>
  TokenInputs<T> encode(std::span<const KeypointSpec> specs) const;

 private:
  EmbedderKind kind_;
  Skeleton skeleton_;
  std::optional<NormPoseTemplate> norm_pose_;
};

struct RequestedKeypoint {
  KeypointSpec spec;
  Point2 target;
};

/// Labeled fixed keypoints plus `arbitrary_keypoints` limb samples, shuffled
/// and cut to a uniform count in [min_keypoints, max_keypoints]. Failed limb
/// samples are counted in `skipped`.
std::vector<RequestedKeypoint> sample_training_keypoints(const PoseInstance& instance, const Skeleton& skeleton,
                                                         const TrainConfig& config, Rng& rng, std::size_t& skipped);

/// Mean over visible rows of the per-cell mean squared error. When `d_pred`
/// is given it receives d(loss)/d(pred) scaled by `grad_scale`.
template <typename T>
double heatmap_loss(const Mat<T>& pred, const Mat<T>& target, std::span<const int> visible, Mat<T>* d_pred = nullptr,
                    double grad_scale = 1.0);

/// Rows of rendered Gaussian targets; `visible` is cleared for targets
/// outside the heatmap.
template <typename T>
Mat<T> render_targets(std::span<const Point2> points, const ModelConfig& config, std::vector<int>& visible);

struct StepResult {
  double loss = 0.0;
  double learning_rate = 0.0;
  std::size_t skipped = 0;
};

/// Float32 training state: parameters, Adam moments and the step counter.
class Trainer {
 public:
  Trainer(const ModelConfig& model, const TrainConfig& train, KeypointEncoder encoder);

  const Transformer<float>& model() const { return model_; }
  const TrainConfig& train_config() const { return train_; }
  const KeypointEncoder& encoder() const { return encoder_; }
  const ParamVector<float>& parameters() const { return params_; }
  ParamVector<float>& parameters() { return params_; }
  int step() const { return step_; }

  /// Draws a batch from `data` with the RNG of the current step, updates the
  /// parameters and advances the step. Throws NumericError on a non-finite loss.
  StepResult train_step(std::span<const TrainSample> data);

  /// Versioned binary container; identical state gives identical bytes.
  void save_checkpoint(const std::filesystem::path& path) const;
  static Trainer load_checkpoint(const std::filesystem::path& path);

 private:
  Transformer<float> model_;
  TrainConfig train_;
  KeypointEncoder encoder_;
  ParamVector<float> params_;
  ParamVector<float> adam_m_;
  ParamVector<float> adam_v_;
  int step_ = 0;
};

/// Generator for the given step of a run.
Rng step_rng(std::uint64_t seed, int step);

struct CheckpointData {
  nlohmann::json header;  // model, train, step, skeleton, norm_pose
  std::vector<std::pair<std::string, std::vector<float>>> arrays;
};

void write_checkpoint(const std::filesystem::path& path, const CheckpointData& data);
CheckpointData read_checkpoint(const std::filesystem::path& path);

/// Image, embedder inputs and targets of one example.
template <typename T>
struct PreparedSample {
  Mat<T> image;
  TokenInputs<T> inputs;
  Mat<T> targets;
  std::vector<int> visible;
};

template <typename T>
PreparedSample<T> prepare_sample(const Mat<T>& image, std::span<const RequestedKeypoint> keypoints,
                                 const KeypointEncoder& encoder, const ModelConfig& config);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::string worst_parameter;
};

/// Compares backward() with central differences (step h) on `count`
/// parameters drawn round-robin over the parameter blocks. The relative error
/// is |a - n| / max(|a|, |n|, 1e-8).
GradientCheckResult gradient_check(const Transformer<double>& model, const ParamVector<double>& params,
                                   std::span<const PreparedSample<double>> batch, std::size_t count,
                                   std::uint64_t seed, double h = 1e-4);

/// Batch loss and its gradient (same normalization as training).
template <typename T>
double batch_loss(const Transformer<T>& model, const T* params, std::span<const PreparedSample<T>> batch,
                  ParamVector<T>* grad);

}  // namespace limbpose
