// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "limbpose/model/predict.hpp"

#include "limbpose/errors.hpp"
#include "limbpose/synthetic.hpp"

namespace limbpose {

template <typename T>
std::vector<Prediction> predict(const Transformer<T>& model, const T* params, const KeypointEncoder& encoder,
                                const Mat<T>& image, std::span<const KeypointSpec> specs) {
  const ModelConfig& c = model.config();
  const Mat<T> maps = model.forward(params, image, encoder.encode<T>(specs));
  std::vector<Prediction> out;
  out.reserve(specs.size());
  Heatmap hm(c.heatmap_width, c.heatmap_height, c.stride_x(), c.stride_y());
  for (Eigen::Index k = 0; k < maps.rows(); ++k) {
    for (int i = 0; i < c.cells(); ++i) hm.values[i] = static_cast<double>(maps(k, i));
    const DecodedPoint d = decode_dark(hm);
    out.push_back({d.point, d.confidence, d.flag});
  }
  return out;
}

template std::vector<Prediction> predict<float>(const Transformer<float>&, const float*, const KeypointEncoder&,
                                                const Mat<float>&, std::span<const KeypointSpec>);
template std::vector<Prediction> predict<double>(const Transformer<double>&, const double*, const KeypointEncoder&,
                                                 const Mat<double>&, std::span<const KeypointSpec>);

std::vector<Point2> ModelPredictor::locate(const TrainSample& sample, std::span<const KeypointSpec> specs) {
  std::vector<Point2> points;
  for (const Prediction& p : predict<float>(model_, params_.data(), encoder_, sample.image, specs)) {
    points.push_back(p.point);
  }
  return points;
}

std::optional<Point2> realize_on_instance(const PoseInstance& instance, const KeypointSpec& spec) {
  if (const auto* fixed = std::get_if<FixedKeypoint>(&spec)) {
    if (fixed->index < 0 || static_cast<std::size_t>(fixed->index) >= instance.keypoints.size()) return std::nullopt;
    return instance.keypoints[fixed->index];
  }
  const auto& limb = std::get<LimbKeypointSpec>(spec);
  const BodyPartMask* mask = instance.mask(limb.limb);
  if (!mask) return std::nullopt;
  try {
    return realize_keypoint(*mask, limb);
  } catch (const NoSection&) {
    return std::nullopt;
  }
}

std::vector<Point2> GroundTruthPredictor::locate(const TrainSample& sample, std::span<const KeypointSpec> specs) {
  std::vector<Point2> points;
  for (const KeypointSpec& s : specs) points.push_back(realize_on_instance(sample.instance, s).value_or(Point2{}));
  return points;
}

EvalSample make_eval_sample(const TrainSample& sample, Predictor& predictor, const Skeleton& skeleton, int grid_rows,
                            int grid_cols) {
  const PoseInstance& inst = sample.instance;
  EvalSample e;
  e.fixed_truth = inst.keypoints;
  e.visibility = inst.visibility;
  e.fixed_predicted.assign(inst.keypoints.size(), Point2{});
  e.torso_size = inst.torso_size(skeleton);
  e.area = inst.area;
  e.masks = inst.masks;

  std::vector<KeypointSpec> specs;
  std::vector<int> fixed_slots;
  for (std::size_t i = 0; i < inst.keypoints.size(); ++i) {
    if (inst.visibility[i] <= 0) continue;
    specs.push_back(FixedKeypoint{static_cast<int>(i)});
    fixed_slots.push_back(static_cast<int>(i));
  }
  std::vector<EvalSample::Generated> generated;
  for (const LimbKeypointSpec& g : make_eval_grid(inst, grid_rows, grid_cols)) {
    const auto truth = realize_on_instance(inst, g);
    if (!truth) continue;
    specs.push_back(g);
    generated.push_back({g, *truth, {}});
  }
  const std::vector<Point2> points = predictor.locate(sample, specs);
  if (points.size() != specs.size()) throw DomainError("predictor returned the wrong number of points");
  for (std::size_t i = 0; i < fixed_slots.size(); ++i) e.fixed_predicted[fixed_slots[i]] = points[i];
  for (std::size_t i = 0; i < generated.size(); ++i) generated[i].predicted = points[fixed_slots.size() + i];
  e.generated = std::move(generated);
  return e;
}

EvalReport evaluate_predictor(std::span<const TrainSample> samples, Predictor& predictor, const Skeleton& skeleton,
                              int grid_rows, int grid_cols, const EvalConfig& config) {
  std::vector<EvalSample> evals;
  evals.reserve(samples.size());
  for (const TrainSample& s : samples) evals.push_back(make_eval_sample(s, predictor, skeleton, grid_rows, grid_cols));
  return evaluate(evals, config);
}

}  // namespace limbpose
