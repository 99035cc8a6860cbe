// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "limbpose/model/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

#include "limbpose/errors.hpp"
#include "limbpose/heatmap.hpp"
#include "limbpose/json_util.hpp"

namespace limbpose {

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

namespace {

constexpr char kCheckpointMagic[8] = {'L', 'P', 'C', 'K', 'P', 'T', '\0', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename V>
void put(std::ostream& out, V value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(V));
}

template <typename V>
V get(std::istream& in, const std::string& path) {
  V value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(V))) throw DataError(path + ": truncated checkpoint");
  return value;
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("train: " + msg); };
  if (steps < 0) fail("steps must be non-negative");
  if (batch_size <= 0) fail("batch_size must be positive");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (warmup_steps < 0) fail("warmup_steps must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) fail("betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (arbitrary_keypoints < 0) fail("arbitrary_keypoints must be non-negative");
  if (min_keypoints < 1 || max_keypoints < min_keypoints) fail("need 1 <= min_keypoints <= max_keypoints");
  if (!(thickness_sigma > 0.0)) fail("thickness_sigma must be positive");
  if (log_every < 0 || eval_every < 0 || checkpoint_every < 0) fail("intervals must be non-negative");
}

double TrainConfig::learning_rate_at(int step) const {
  double lr = learning_rate;
  if (warmup_steps > 0) lr *= std::min(1.0, (step + 1.0) / warmup_steps);
  if (cosine_decay && steps > 0) lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * step / steps));
  return lr;
}

nlohmann::json TrainConfig::to_json() const {
  return {{"steps", steps},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"warmup_steps", warmup_steps},
          {"cosine_decay", cosine_decay},
          {"beta1", beta1},
          {"beta2", beta2},
          {"epsilon", epsilon},
          {"arbitrary_keypoints", arbitrary_keypoints},
          {"min_keypoints", min_keypoints},
          {"max_keypoints", max_keypoints},
          {"thickness_sigma", thickness_sigma},
          {"log_every", log_every},
          {"eval_every", eval_every},
          {"checkpoint_every", checkpoint_every},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"steps", "batch_size", "learning_rate", "warmup_steps", "cosine_decay", "beta1", "beta2",
                       "epsilon", "arbitrary_keypoints", "min_keypoints", "max_keypoints", "thickness_sigma",
                       "log_every", "eval_every", "checkpoint_every", "seed"},
                      "train");
  TrainConfig c;
  c.steps = json_get_or(j, "steps", c.steps, "train");
  c.batch_size = json_get_or(j, "batch_size", c.batch_size, "train");
  c.learning_rate = json_get_or(j, "learning_rate", c.learning_rate, "train");
  c.warmup_steps = json_get_or(j, "warmup_steps", c.warmup_steps, "train");
  c.cosine_decay = json_get_or(j, "cosine_decay", c.cosine_decay, "train");
  c.beta1 = json_get_or(j, "beta1", c.beta1, "train");
  c.beta2 = json_get_or(j, "beta2", c.beta2, "train");
  c.epsilon = json_get_or(j, "epsilon", c.epsilon, "train");
  c.arbitrary_keypoints = json_get_or(j, "arbitrary_keypoints", c.arbitrary_keypoints, "train");
  c.min_keypoints = json_get_or(j, "min_keypoints", c.min_keypoints, "train");
  c.max_keypoints = json_get_or(j, "max_keypoints", c.max_keypoints, "train");
  c.thickness_sigma = json_get_or(j, "thickness_sigma", c.thickness_sigma, "train");
  c.log_every = json_get_or(j, "log_every", c.log_every, "train");
  c.eval_every = json_get_or(j, "eval_every", c.eval_every, "train");
  c.checkpoint_every = json_get_or(j, "checkpoint_every", c.checkpoint_every, "train");
  c.seed = json_get_or(j, "seed", c.seed, "train");
  c.validate();
  return c;
}

TrainSample to_train_sample(const FittedSample& fitted, const ModelConfig& config) {
  const auto expected = static_cast<std::size_t>(config.image_height) * static_cast<std::size_t>(config.image_width);
  if (fitted.pixels.size() != expected) throw DomainError("fitted sample does not match the model input size");
  TrainSample s;
  s.image = Eigen::Map<const Mat<float>>(fitted.pixels.data(), config.image_height, config.image_width);
  s.instance = fitted.instance;
  s.transform = fitted.transform;
  return s;
}

KeypointEncoder::KeypointEncoder(const ModelConfig& config, Skeleton skeleton,
                                 std::optional<NormPoseTemplate> norm_pose)
    : kind_(config.embedder), skeleton_(std::move(skeleton)), norm_pose_(std::move(norm_pose)) {
  if (static_cast<int>(skeleton_.size()) != config.num_keypoints) {
    throw ConfigError("model num_keypoints (" + std::to_string(config.num_keypoints) + ") does not match skeleton '" +
                      skeleton_.name + "' (" + std::to_string(skeleton_.size()) + ")");
  }
  if (config.uses_norm_pose()) {
    if (!norm_pose_) norm_pose_ = NormPoseTemplate::default_for(skeleton_);
    norm_pose_->validate();
  }
}

template <typename T>
TokenInputs<T> KeypointEncoder::encode(std::span<const KeypointSpec> specs) const {
  const auto k = static_cast<Eigen::Index>(specs.size());
  TokenInputs<T> in;
  if (kind_ == EmbedderKind::kNormPoseLinear || kind_ == EmbedderKind::kNormPoseMlp) {
    in.coords.resize(k, 2);
    for (Eigen::Index i = 0; i < k; ++i) {
      validate(specs[i], skeleton_);
      const Point2 c = encode_norm_pose(specs[i], *norm_pose_);
      in.coords(i, 0) = static_cast<T>(c.x);
      in.coords(i, 1) = static_cast<T>(c.y);
    }
    return in;
  }
  in.keypoint.resize(k, static_cast<Eigen::Index>(skeleton_.size()));
  in.thickness.resize(k, 3);
  for (Eigen::Index i = 0; i < k; ++i) {
    const VectorizedEncoding e = encode_vectorized(specs[i], skeleton_);
    for (std::size_t j = 0; j < e.keypoint.size(); ++j) in.keypoint(i, j) = static_cast<T>(e.keypoint[j]);
    for (int j = 0; j < 3; ++j) in.thickness(i, j) = static_cast<T>(e.thickness[j]);
  }
  return in;
}

template TokenInputs<float> KeypointEncoder::encode<float>(std::span<const KeypointSpec>) const;
template TokenInputs<double> KeypointEncoder::encode<double>(std::span<const KeypointSpec>) const;

std::vector<RequestedKeypoint> sample_training_keypoints(const PoseInstance& instance, const Skeleton& skeleton,
                                                         const TrainConfig& config, Rng& rng, std::size_t& skipped) {
  std::vector<RequestedKeypoint> items;
  for (std::size_t i = 0; i < skeleton.size(); ++i) {
    if (instance.visibility[i] > 0) items.push_back({FixedKeypoint{static_cast<int>(i)}, instance.keypoints[i]});
  }
  if (!instance.masks.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, instance.masks.size() - 1);
    for (int n = 0; n < config.arbitrary_keypoints; ++n) {
      const BodyPartMask& mask = instance.masks[pick(rng)];
      try {
        const SampledKeypoint s = sample_keypoint(mask, rng, config.thickness_sigma);
        items.push_back({s.spec, s.point});
      } catch (const GenerationFailed&) {
        ++skipped;
      }
    }
  }
  std::shuffle(items.begin(), items.end(), rng);
  std::uniform_int_distribution<int> count(config.min_keypoints, config.max_keypoints);
  const auto k = static_cast<std::size_t>(count(rng));
  if (items.size() > k) items.resize(k);
  return items;
}

template <typename T>
double heatmap_loss(const Mat<T>& pred, const Mat<T>& target, std::span<const int> visible, Mat<T>* d_pred,
                    double grad_scale) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() ||
      static_cast<std::size_t>(pred.rows()) != visible.size()) {
    throw DomainError("heatmap_loss: shape mismatch");
  }
  if (d_pred) d_pred->setZero(pred.rows(), pred.cols());
  const Eigen::Index cells = pred.cols();
  std::size_t count = 0;
  for (int v : visible) count += v > 0 ? 1 : 0;
  if (count == 0) return 0.0;
  double total = 0.0;
  const double row_scale = 1.0 / (static_cast<double>(count) * static_cast<double>(cells));
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    if (visible[i] <= 0) continue;
    const auto diff = (pred.row(i) - target.row(i)).eval();
    total += static_cast<double>(diff.squaredNorm());
    if (d_pred) d_pred->row(i) = diff * static_cast<T>(2.0 * row_scale * grad_scale);
  }
  return total * row_scale;
}

template double heatmap_loss<float>(const Mat<float>&, const Mat<float>&, std::span<const int>, Mat<float>*, double);
template double heatmap_loss<double>(const Mat<double>&, const Mat<double>&, std::span<const int>, Mat<double>*,
                                     double);

template <typename T>
Mat<T> render_targets(std::span<const Point2> points, const ModelConfig& config, std::vector<int>& visible) {
  visible.resize(points.size(), 1);
  Mat<T> out(static_cast<Eigen::Index>(points.size()), config.cells());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const RenderedHeatmap r = render_gaussian(points[i], config.heatmap_width, config.heatmap_height,
                                              config.stride_x(), config.stride_y(), config.heatmap_sigma);
    if (r.target_outside) visible[i] = 0;
    for (int c = 0; c < config.cells(); ++c) out(static_cast<Eigen::Index>(i), c) = static_cast<T>(r.heatmap.values[c]);
  }
  return out;
}

template Mat<float> render_targets<float>(std::span<const Point2>, const ModelConfig&, std::vector<int>&);
template Mat<double> render_targets<double>(std::span<const Point2>, const ModelConfig&, std::vector<int>&);

template <typename T>
PreparedSample<T> prepare_sample(const Mat<T>& image, std::span<const RequestedKeypoint> keypoints,
                                 const KeypointEncoder& encoder, const ModelConfig& config) {
  std::vector<KeypointSpec> specs;
  std::vector<Point2> points;
  for (const RequestedKeypoint& r : keypoints) {
    specs.push_back(r.spec);
    points.push_back(r.target);
  }
  PreparedSample<T> s;
  s.image = image;
  s.inputs = encoder.encode<T>(specs);
  s.visible.assign(points.size(), 1);
  s.targets = render_targets<T>(points, config, s.visible);
  return s;
}

template PreparedSample<float> prepare_sample<float>(const Mat<float>&, std::span<const RequestedKeypoint>,
                                                     const KeypointEncoder&, const ModelConfig&);
template PreparedSample<double> prepare_sample<double>(const Mat<double>&, std::span<const RequestedKeypoint>,
                                                       const KeypointEncoder&, const ModelConfig&);

template <typename T>
double batch_loss(const Transformer<T>& model, const T* params, std::span<const PreparedSample<T>> batch,
                  ParamVector<T>* grad) {
  std::size_t total_visible = 0;
  for (const auto& s : batch) {
    for (int v : s.visible) total_visible += v > 0 ? 1 : 0;
  }
  if (grad) grad->assign(model.layout().total(), T(0));
  if (total_visible == 0) return 0.0;
  double loss = 0.0;
  ForwardCache<T> cache;
  Mat<T> d_out;
  for (const auto& s : batch) {
    std::size_t vis = 0;
    for (int v : s.visible) vis += v > 0 ? 1 : 0;
    if (vis == 0) continue;
    const double weight = static_cast<double>(vis) / static_cast<double>(total_visible);
    const Mat<T> out = model.forward(params, s.image, s.inputs, grad ? &cache : nullptr);
    loss += weight * heatmap_loss<T>(out, s.targets, s.visible, grad ? &d_out : nullptr, weight);
    if (grad) model.backward(params, s.image, s.inputs, cache, d_out, grad->data());
  }
  return loss;
}

template double batch_loss<float>(const Transformer<float>&, const float*, std::span<const PreparedSample<float>>,
                                  ParamVector<float>*);
template double batch_loss<double>(const Transformer<double>&, const double*, std::span<const PreparedSample<double>>,
                                   ParamVector<double>*);

Rng step_rng(std::uint64_t seed, int step) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(step), 0x6c70u};
  return Rng(seq);
}

Trainer::Trainer(const ModelConfig& model, const TrainConfig& train, KeypointEncoder encoder)
    : model_(model), train_(train), encoder_(std::move(encoder)) {
  train_.validate();
  params_ = model_.initial_parameters();
  adam_m_.assign(params_.size(), 0.0f);
  adam_v_.assign(params_.size(), 0.0f);
}

StepResult Trainer::train_step(std::span<const TrainSample> data) {
  if (data.empty()) throw DomainError("train_step needs at least one sample");
  Rng rng = step_rng(train_.seed, step_);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  StepResult result;
  std::vector<PreparedSample<float>> batch;
  batch.reserve(static_cast<std::size_t>(train_.batch_size));
  for (int b = 0; b < train_.batch_size; ++b) {
    const TrainSample& s = data[pick(rng)];
    const auto keypoints =
        sample_training_keypoints(s.instance, encoder_.skeleton(), train_, rng, result.skipped);
    batch.push_back(prepare_sample<float>(s.image, keypoints, encoder_, model_.config()));
  }
  ParamVector<float> grad;
  result.loss = batch_loss<float>(model_, params_.data(), batch, &grad);
  if (!std::isfinite(result.loss)) {
    throw NumericError("non-finite loss at step " + std::to_string(step_) + " (learning rate " +
                       std::to_string(train_.learning_rate_at(step_)) + ")");
  }
  result.learning_rate = train_.learning_rate_at(step_);
  const double t = step_ + 1.0;
  const auto lr_hat = static_cast<float>(result.learning_rate * std::sqrt(1.0 - std::pow(train_.beta2, t)) /
                                         (1.0 - std::pow(train_.beta1, t)));
  const auto b1 = static_cast<float>(train_.beta1);
  const auto b2 = static_cast<float>(train_.beta2);
  const auto eps_hat = static_cast<float>(train_.epsilon * std::sqrt(1.0 - std::pow(train_.beta2, t)));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const float g = grad[i];
    adam_m_[i] = b1 * adam_m_[i] + (1.0f - b1) * g;
    adam_v_[i] = b2 * adam_v_[i] + (1.0f - b2) * g * g;
    params_[i] -= lr_hat * adam_m_[i] / (std::sqrt(adam_v_[i]) + eps_hat);
  }
  ++step_;
  return result;
}

void write_checkpoint(const std::filesystem::path& path, const CheckpointData& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string header = data.header.dump();
  put<std::uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(data.arrays.size()));
  for (const auto& [name, values] : data.arrays) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint64_t>(out, values.size());
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * 4));
  }
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

CheckpointData read_checkpoint(const std::filesystem::path& path) {
  const std::string where = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + where);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw DataError(where + ": not a limbpose checkpoint");
  }
  const auto version = get<std::uint32_t>(in, where);
  if (version != kCheckpointVersion) {
    throw DataError(where + ": unsupported checkpoint version " + std::to_string(version));
  }
  CheckpointData data;
  const auto header_size = get<std::uint64_t>(in, where);
  if (header_size > (1u << 26)) throw DataError(where + ": corrupt header");
  std::string header(header_size, '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(header_size))) throw DataError(where + ": truncated");
  try {
    data.header = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": bad header: " + e.what());
  }
  const auto count = get<std::uint32_t>(in, where);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_size = get<std::uint32_t>(in, where);
    if (name_size > 4096) throw DataError(where + ": corrupt array name");
    std::string name(name_size, '\0');
    if (!in.read(name.data(), name_size)) throw DataError(where + ": truncated");
    const auto n = get<std::uint64_t>(in, where);
    if (n > (1ull << 32)) throw DataError(where + ": corrupt array size");
    std::vector<float> values(n);
    if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(n * 4))) {
      throw DataError(where + ": truncated array " + name);
    }
    data.arrays.emplace_back(std::move(name), std::move(values));
  }
  return data;
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  CheckpointData data;
  data.header = {{"model", model_.config().to_json()},
                 {"train", train_.to_json()},
                 {"step", step_},
                 {"skeleton", encoder_.skeleton().to_json()}};
  if (encoder_.norm_pose()) data.header["norm_pose"] = encoder_.norm_pose()->to_json(encoder_.skeleton());
  const ParamVector<float>* sources[3] = {&params_, &adam_m_, &adam_v_};
  const char* prefixes[3] = {"params/", "adam_m/", "adam_v/"};
  for (int s = 0; s < 3; ++s) {
    for (const ParamEntry& e : model_.layout().entries()) {
      const auto first = sources[s]->begin() + static_cast<std::ptrdiff_t>(e.offset);
      data.arrays.emplace_back(prefixes[s] + e.name,
                               std::vector<float>(first, first + static_cast<std::ptrdiff_t>(e.size())));
    }
  }
  write_checkpoint(path, data);
}

Trainer Trainer::load_checkpoint(const std::filesystem::path& path) {
  const CheckpointData data = read_checkpoint(path);
  const std::string where = path.string();
  try {
    const ModelConfig model = ModelConfig::from_json(data.header.at("model"));
    const TrainConfig train = TrainConfig::from_json(data.header.at("train"));
    Skeleton skeleton = Skeleton::from_json(data.header.at("skeleton"));
    std::optional<NormPoseTemplate> norm_pose;
    if (data.header.contains("norm_pose")) norm_pose = NormPoseTemplate::from_json(data.header["norm_pose"], skeleton);
    Trainer t(model, train, KeypointEncoder(model, std::move(skeleton), std::move(norm_pose)));
    t.step_ = data.header.at("step").get<int>();
    ParamVector<float>* targets[3] = {&t.params_, &t.adam_m_, &t.adam_v_};
    const char* prefixes[3] = {"params/", "adam_m/", "adam_v/"};
    for (int s = 0; s < 3; ++s) {
      for (const ParamEntry& e : t.model_.layout().entries()) {
        const std::string name = prefixes[s] + e.name;
        const auto it = std::find_if(data.arrays.begin(), data.arrays.end(),
                                     [&](const auto& a) { return a.first == name; });
        if (it == data.arrays.end()) throw DataError(where + ": missing array " + name);
        if (it->second.size() != e.size()) throw DataError(where + ": wrong size for " + name);
        std::copy(it->second.begin(), it->second.end(), targets[s]->begin() + static_cast<std::ptrdiff_t>(e.offset));
      }
    }
    for (float v : t.params_) {
      if (!std::isfinite(v)) throw NumericError(where + ": non-finite parameter");
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": bad header: " + e.what());
  }
}

GradientCheckResult gradient_check(const Transformer<double>& model, const ParamVector<double>& params,
                                   std::span<const PreparedSample<double>> batch, std::size_t count,
                                   std::uint64_t seed, double h) {
  ParamVector<double> grad;
  batch_loss<double>(model, params.data(), batch, &grad);
  ParamVector<double> probe = params;
  const auto& entries = model.layout().entries();
  Rng rng(seed);
  GradientCheckResult result;
  for (std::size_t n = 0; n < count; ++n) {
    const ParamEntry& e = entries[n % entries.size()];
    std::uniform_int_distribution<std::size_t> pick(0, e.size() - 1);
    const std::size_t i = e.offset + pick(rng);
    probe[i] = params[i] + h;
    const double up = batch_loss<double>(model, probe.data(), batch, nullptr);
    probe[i] = params[i] - h;
    const double down = batch_loss<double>(model, probe.data(), batch, nullptr);
    probe[i] = params[i];
    const double numeric = (up - down) / (2.0 * h);
    const double err =
        std::abs(grad[i] - numeric) / std::max({std::abs(grad[i]), std::abs(numeric), 1e-8});
    if (err >= result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_parameter = e.name;
    }
    ++result.checked;
  }
  return result;
}

}  // namespace limbpose
