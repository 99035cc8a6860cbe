// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "limbpose/heatmap.hpp"
#include "limbpose/metrics.hpp"
#include "limbpose/model/trainer.hpp"

namespace limbpose {

struct Prediction {
  Point2 point;  // input-image coordinates
  double confidence = 0.0;
  DecodeFlag flag = DecodeFlag::kNone;
};

/// Forward pass followed by DARK decoding of every heatmap.
template <typename T>
std::vector<Prediction> predict(const Transformer<T>& model, const T* params, const KeypointEncoder& encoder,
                                const Mat<T>& image, std::span<const KeypointSpec> specs);

class Predictor {
 public:
  virtual ~Predictor() = default;
  /// One point per spec, in input coordinates of `sample`.
  virtual std::vector<Point2> locate(const TrainSample& sample, std::span<const KeypointSpec> specs) = 0;
};

class ModelPredictor : public Predictor {
 public:
  ModelPredictor(const Transformer<float>& model, const ParamVector<float>& params, const KeypointEncoder& encoder)
      : model_(model), params_(params), encoder_(encoder) {}

  std::vector<Point2> locate(const TrainSample& sample, std::span<const KeypointSpec> specs) override;

 private:
  const Transformer<float>& model_;
  const ParamVector<float>& params_;
  const KeypointEncoder& encoder_;
};

/// Answers from the annotations themselves; a perfect predictor.
class GroundTruthPredictor : public Predictor {
 public:
  std::vector<Point2> locate(const TrainSample& sample, std::span<const KeypointSpec> specs) override;
};

/// Truth location of a spec on an instance; nullopt when the limb has no mask
/// or no cross-section at p_b.
std::optional<Point2> realize_on_instance(const PoseInstance& instance, const KeypointSpec& spec);

/// Predicts the labeled fixed keypoints and a rows x cols grid on every limb
/// mask of the sample in one request.
EvalSample make_eval_sample(const TrainSample& sample, Predictor& predictor, const Skeleton& skeleton, int grid_rows,
                            int grid_cols);

EvalReport evaluate_predictor(std::span<const TrainSample> samples, Predictor& predictor, const Skeleton& skeleton,
                              int grid_rows, int grid_cols, const EvalConfig& config);

}  // namespace limbpose
