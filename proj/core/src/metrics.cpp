#include <cmath>

#include <json.hpp>

#include "eegcaps/error.hpp"
#include "eegcaps/experiment.hpp"

namespace eegcaps {

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.tn = tn;
  m.fn = fn;
  const std::size_t total = tp + fp + tn + fn;
  if (total == 0) fail(ErrorCode::EmptyTestSet, "no test examples");
  m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(total);
  if (tp + fn > 0) m.sensitivity = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (tn + fp > 0) m.specificity = static_cast<double>(tn) / static_cast<double>(tn + fp);
  return m;
}

Metrics metrics_from_predictions(std::span<const Group> truth, std::span<const Group> predicted) {
  if (truth.size() != predicted.size()) {
    fail(ErrorCode::ShapeMismatch, "truth and prediction counts differ");
  }
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool pos = truth[i] == Group::PD;
    const bool said_pos = predicted[i] == Group::PD;
    if (pos && said_pos) ++tp;
    else if (pos) ++fn;
    else if (said_pos) ++fp;
    else ++tn;
  }
  return metrics_from_counts(tp, fp, tn, fn);
}

template <typename T>
Metrics evaluate(const capsnet::ModelParams<T>& params, const capsnet::ModelConfig& config,
                 std::span<const FeatureImage> test_images) {
  if (test_images.empty()) fail(ErrorCode::EmptyTestSet, "no test images");
  std::vector<Group> truth, predicted;
  for (const auto& img : test_images) {
    truth.push_back(img.group);
    predicted.push_back(static_cast<Group>(capsnet::predict(img, params, config)));
  }
  return metrics_from_predictions(truth, predicted);
}

template Metrics evaluate(const capsnet::ModelParams<float>&, const capsnet::ModelConfig&,
                          std::span<const FeatureImage>);
template Metrics evaluate(const capsnet::ModelParams<double>&, const capsnet::ModelConfig&,
                          std::span<const FeatureImage>);

MetricSummary summarize(std::span<const std::optional<double>> values) {
  MetricSummary s;
  double sum = 0.0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++s.count;
    }
  }
  if (s.count == 0) return s;
  s.mean = sum / static_cast<double>(s.count);
  double sq = 0.0;
  for (const auto& v : values) {
    if (v) sq += (*v - s.mean) * (*v - s.mean);
  }
  s.stddev = std::sqrt(sq / static_cast<double>(s.count));
  return s;
}

std::string metrics_to_json(const Metrics& m) {
  nlohmann::json j;
  j["accuracy"] = m.accuracy;
  j["sensitivity"] = m.sensitivity ? nlohmann::json(*m.sensitivity) : nlohmann::json(nullptr);
  j["specificity"] = m.specificity ? nlohmann::json(*m.specificity) : nlohmann::json(nullptr);
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["tn"] = m.tn;
  j["fn"] = m.fn;
  return j.dump(2);
}

}  // namespace eegcaps
