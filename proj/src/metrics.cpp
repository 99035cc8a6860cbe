// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "limbpose/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "limbpose/errors.hpp"

namespace limbpose {

namespace {

constexpr std::string_view kPctPrefix = "pct@";

const BodyPartMask& mask_for(const EvalSample& sample, LimbId limb) {
  const auto it = std::find_if(sample.masks.begin(), sample.masks.end(),
                               [limb](const BodyPartMask& m) { return m.limb == limb; });
  if (it == sample.masks.end()) throw DomainError("generated keypoint on a limb without a mask");
  return *it;
}

void require_aligned(const EvalSample& s) {
  const std::size_t n = s.fixed_truth.size();
  if (s.fixed_predicted.size() != n || s.visibility.size() != n) {
    throw DomainError("fixed keypoint predictions, ground truth and visibility are misaligned");
  }
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::string fixed3(double v) { return fmt::format("{:.3f}", v); }

}  // namespace

ThicknessError thickness_error(double t0, const SideClassification& prediction) {
  ThicknessError out;
  out.ground_truth_thickness = t0;
  out.classification = prediction.side;
  out.predicted_ratio = prediction.ratio;
  switch (prediction.side) {
    case SideClass::kSameSide:
      out.error = std::abs(t0 - prediction.ratio);
      break;
    case SideClass::kOppositeSide:
      out.error = prediction.ratio + t0;
      break;
    case SideClass::kUnresolvable:
      out.error = kMaxThicknessError;
      break;
  }
  out.error = std::min(out.error, kMaxThicknessError);
  return out;
}

ThicknessError thickness_error(const BodyPartMask& mask, const LimbKeypointSpec& ground_truth, Point2 predicted) {
  ground_truth.validate();
  const CrossSection section = cross_section(mask, ground_truth.line_fraction);
  const Point2 truth = realize_keypoint(section, ground_truth.signed_thickness);
  const Point2 boundary = ground_truth.signed_thickness >= 0.0 ? section.side1 : section.side2;
  const double span = distance(boundary, section.projection);
  const double t0 = span > 0.0 ? distance(truth, section.projection) / span : 0.0;
  return thickness_error(t0, classify_prediction(mask, predicted, ground_truth));
}

double mte(std::span<const ThicknessError> errors) {
  if (errors.empty()) throw DomainError("mean thickness error of an empty list");
  double sum = 0.0;
  for (const ThicknessError& e : errors) sum += e.error;
  return sum / static_cast<double>(errors.size());
}

double pct(std::span<const ThicknessError> errors, double threshold) {
  if (errors.empty()) throw DomainError("thickness correctness of an empty list");
  if (!(threshold > 0.0 && threshold <= kMaxThicknessError)) throw DomainError("PCT threshold must lie in (0, 2]");
  const auto below = std::count_if(errors.begin(), errors.end(),
                                   [threshold](const ThicknessError& e) { return e.error < threshold; });
  return static_cast<double>(below) / static_cast<double>(errors.size());
}

double PckTally::recall() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }

PckTally& PckTally::operator+=(const PckTally& other) {
  correct += other.correct;
  total += other.total;
  skipped_instances += other.skipped_instances;
  return *this;
}

PckTally pck(std::span<const Point2> predicted, std::span<const Point2> truth, std::span<const int> visibility,
             double torso_size, double threshold) {
  if (predicted.size() != truth.size() || visibility.size() != truth.size()) {
    throw DomainError("PCK inputs are misaligned");
  }
  PckTally tally;
  if (!(torso_size > 0.0)) {
    tally.skipped_instances = 1;
    return tally;
  }
  const double limit = threshold * torso_size;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (visibility[i] <= 0) continue;
    ++tally.total;
    if (distance(predicted[i], truth[i]) <= limit) ++tally.correct;
  }
  return tally;
}

std::optional<double> oks(std::span<const Point2> predicted, std::span<const Point2> truth,
                          std::span<const int> visibility, double scale, std::span<const double> constants) {
  if (predicted.size() != truth.size() || visibility.size() != truth.size() || constants.size() != truth.size()) {
    throw DomainError("OKS inputs are misaligned");
  }
  if (!(scale > 0.0)) throw DomainError("OKS object scale must be positive");
  double sum = 0.0;
  int visible = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (visibility[i] <= 0) continue;
    const Point2 d = predicted[i] - truth[i];
    const double sk = scale * constants[i];
    sum += std::exp(-dot(d, d) / (2.0 * sk * sk));
    ++visible;
  }
  if (visible == 0) return std::nullopt;
  return sum / visible;
}

std::vector<double> default_oks_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50 + 5 * i) / 100.0);
  return t;
}

ApAr ap_ar(std::span<const double> oks_values, std::span<const double> thresholds) {
  if (oks_values.empty() || thresholds.empty()) throw DomainError("AP over an empty list");
  auto pass_rate = [&](double t) {
    const auto n = std::count_if(oks_values.begin(), oks_values.end(), [t](double v) { return v >= t; });
    return static_cast<double>(n) / static_cast<double>(oks_values.size());
  };
  ApAr out;
  for (double t : thresholds) out.ap += pass_rate(t);
  out.ap /= static_cast<double>(thresholds.size());
  out.ar = out.ap;
  out.ap50 = pass_rate(0.5);
  out.ap75 = pass_rate(0.75);
  return out;
}

EvalReport evaluate(std::span<const EvalSample> samples, const EvalConfig& config) {
  if (samples.empty()) throw DomainError("nothing to evaluate");
  EvalReport report;
  std::vector<ThicknessError> errors;
  PckTally fixed_tally;
  PckTally full_tally;
  std::vector<Point2> pred;
  std::vector<Point2> truth;
  std::vector<int> vis;
  for (const EvalSample& s : samples) {
    require_aligned(s);
    ++report.counts.instances;
    report.counts.fixed_keypoints += s.fixed_truth.size();
    const PckTally fixed = pck(s.fixed_predicted, s.fixed_truth, s.visibility, s.torso_size, config.pck_threshold);
    fixed_tally += fixed;

    pred = s.fixed_predicted;
    truth = s.fixed_truth;
    vis = s.visibility;
    for (const EvalSample::Generated& g : s.generated) {
      errors.push_back(thickness_error(mask_for(s, g.spec.limb), g.spec, g.predicted));
      pred.push_back(g.predicted);
      truth.push_back(g.truth);
      vis.push_back(2);
    }
    full_tally += pck(pred, truth, vis, s.torso_size, config.pck_threshold);
    report.counts.generated_keypoints += s.generated.size();

    if (!config.oks_constants.empty()) {
      if (config.oks_constants.size() != s.fixed_truth.size()) {
        throw DomainError("OKS constants do not match the fixed keypoint count");
      }
      std::optional<double> value;
      if (s.area > 0.0) {
        value = oks(s.fixed_predicted, s.fixed_truth, s.visibility, std::sqrt(s.area), config.oks_constants);
      }
      if (value) {
        report.oks_per_instance.push_back(*value);
      } else {
        ++report.counts.oks_skipped_instances;
      }
    }
  }
  report.counts.pck_skipped_instances = fixed_tally.skipped_instances;
  report.pck_fixed = fixed_tally.recall();
  report.pck_full = full_tally.recall();
  for (const ThicknessError& e : errors) {
    switch (e.classification) {
      case SideClass::kSameSide: ++report.counts.same_side; break;
      case SideClass::kOppositeSide: ++report.counts.opposite_side; break;
      case SideClass::kUnresolvable: ++report.counts.unresolvable; break;
    }
  }
  if (!errors.empty()) {
    report.mte = mte(errors);
    for (double t : config.pct_thresholds) report.pct_at[t] = pct(errors, t);
  }
  if (!report.oks_per_instance.empty()) {
    const auto thresholds = default_oks_thresholds();
    report.ap = ap_ar(report.oks_per_instance, thresholds);
  }
  return report;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["mte"] = optional_json(mte);
  for (const auto& [t, v] : pct_at) j[fmt::format("{}{}", kPctPrefix, t)] = v;
  j["pck_fixed"] = pck_fixed;
  j["pck_full"] = pck_full;
  j["oks_per_instance"] = oks_per_instance;
  if (ap) {
    j["ap"] = ap->ap;
    j["ap50"] = ap->ap50;
    j["ap75"] = ap->ap75;
    j["ar"] = ap->ar;
  } else {
    j["ap"] = nullptr;
  }
  j["counts"] = {{"instances", counts.instances},
                 {"fixed_keypoints", counts.fixed_keypoints},
                 {"generated_keypoints", counts.generated_keypoints},
                 {"same_side", counts.same_side},
                 {"opposite_side", counts.opposite_side},
                 {"unresolvable", counts.unresolvable},
                 {"pck_skipped_instances", counts.pck_skipped_instances},
                 {"oks_skipped_instances", counts.oks_skipped_instances}};
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    if (!j.at("mte").is_null()) r.mte = j.at("mte").get<double>();
    for (const auto& [key, value] : j.items()) {
      if (key.starts_with(kPctPrefix)) r.pct_at[std::stod(key.substr(kPctPrefix.size()))] = value.get<double>();
    }
    r.pck_fixed = j.at("pck_fixed").get<double>();
    r.pck_full = j.at("pck_full").get<double>();
    r.oks_per_instance = j.at("oks_per_instance").get<std::vector<double>>();
    if (!j.at("ap").is_null()) {
      r.ap = ApAr{j.at("ap").get<double>(), j.at("ap50").get<double>(), j.at("ap75").get<double>(),
                  j.at("ar").get<double>()};
    }
    const auto& c = j.at("counts");
    r.counts.instances = c.at("instances").get<std::size_t>();
    r.counts.fixed_keypoints = c.at("fixed_keypoints").get<std::size_t>();
    r.counts.generated_keypoints = c.at("generated_keypoints").get<std::size_t>();
    r.counts.same_side = c.at("same_side").get<std::size_t>();
    r.counts.opposite_side = c.at("opposite_side").get<std::size_t>();
    r.counts.unresolvable = c.at("unresolvable").get<std::size_t>();
    r.counts.pck_skipped_instances = c.at("pck_skipped_instances").get<std::size_t>();
    r.counts.oks_skipped_instances = c.at("oks_skipped_instances").get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed evaluation report: ") + e.what());
  }
}

std::string EvalReport::to_table() const {
  std::vector<std::pair<std::string, std::string>> cols = {{"Avg PCK", fixed3(pck_fixed)},
                                                           {"Full PCK", fixed3(pck_full)},
                                                           {"MTE", mte ? fixed3(*mte) : "-"}};
  for (const auto& [t, v] : pct_at) cols.emplace_back(fmt::format("PCT@{}", t), fixed3(v));
  cols.emplace_back("AP", ap ? fixed3(ap->ap) : "-");
  std::string header;
  std::string row;
  for (const auto& [name, value] : cols) {
    const std::size_t w = std::max(name.size(), value.size());
    header += fmt::format("{:>{}}  ", name, w);
    row += fmt::format("{:>{}}  ", value, w);
  }
  while (!header.empty() && header.back() == ' ') header.pop_back();
  while (!row.empty() && row.back() == ' ') row.pop_back();
  return header + "\n" + row + "\n";
}

}  // namespace limbpose
