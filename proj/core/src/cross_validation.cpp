#include <algorithm>
#include <map>

#include <json.hpp>

#include "eegcaps/error.hpp"
#include "eegcaps/experiment.hpp"

namespace eegcaps {

namespace {

capsnet::ModelConfig config_for(std::span<const FeatureImage> images, capsnet::ModelConfig config) {
  if (images.empty()) fail(ErrorCode::EmptyTrainingSet, "no images");
  const auto& first = images.front();
  if (first.height != first.width) fail(ErrorCode::ShapeMismatch, "images must be square");
  config.in_channels = first.channels;
  config.grid = first.height;
  capsnet::validate_config(config);
  return config;
}

}  // namespace

TrainedFold train_fold(std::span<const FeatureImage> images, const FoldPlan& plan,
                       std::size_t fold_index, const ModelHyper& hyper,
                       const capsnet::EpochCallback& on_epoch) {
  if (fold_index >= plan.k) fail(ErrorCode::InvalidArgument, "fold index out of range");
  std::vector<FeatureImage> train;
  for (const auto& img : images) {
    if (plan.fold_of(img.subject_id) != fold_index) train.push_back(img);
  }
  if (train.empty()) fail(ErrorCode::EmptyTrainingSet, "training folds hold no images");

  TrainedFold out;
  out.config = config_for(train, hyper.config);
  out.normalizer = fit_normalizer(train);

  std::vector<capsnet::TensorF> inputs;
  std::vector<std::size_t> labels;
  inputs.reserve(train.size());
  for (const auto& img : train) {
    inputs.push_back(capsnet::image_tensor<float>(apply_normalizer(img, out.normalizer)));
    labels.push_back(label_of(img.group));
  }
  capsnet::TrainLog log;
  out.params = capsnet::train_model<float>(inputs, labels, out.config, hyper.train, &log, on_epoch);
  out.epoch_loss = std::move(log.epoch_loss);
  return out;
}

FoldEvaluation evaluate_fold(std::span<const FeatureImage> images, const FoldPlan& plan,
                             std::size_t fold_index, const capsnet::ModelConfig& config,
                             const capsnet::ModelParams<float>& params, const Normalizer& norm) {
  std::vector<Group> truth, predicted;
  std::map<std::string, std::pair<std::size_t, std::size_t>> votes;  // id -> (PD votes, total)
  std::map<std::string, Group> subject_truth;
  for (const auto& img : images) {
    if (plan.fold_of(img.subject_id) != fold_index) continue;
    const auto label = capsnet::predict(apply_normalizer(img, norm), params, config);
    const Group said = static_cast<Group>(label);
    truth.push_back(img.group);
    predicted.push_back(said);
    auto& v = votes[img.subject_id];
    v.first += said == Group::PD ? 1 : 0;
    v.second += 1;
    subject_truth[img.subject_id] = img.group;
  }
  if (truth.empty()) fail(ErrorCode::EmptyTestSet, "held-out fold holds no images");

  FoldEvaluation eval;
  eval.epoch_level = metrics_from_predictions(truth, predicted);
  std::vector<Group> s_truth, s_pred;
  for (const auto& [id, v] : votes) {
    s_truth.push_back(subject_truth[id]);
    s_pred.push_back(2 * v.first > v.second ? Group::PD : Group::HC);
  }
  eval.subject_level = metrics_from_predictions(s_truth, s_pred);
  return eval;
}

CVReport cross_validate_images(std::span<const FeatureImage> images, const ModelHyper& hyper,
                               std::uint64_t seed, const CVOptions& options) {
  if (images.empty()) fail(ErrorCode::EmptyTrainingSet, "no images to cross-validate");
  const auto subjects = subjects_of(images);
  const FoldPlan plan = make_folds(subjects, options.k, seed);

  CVReport report;
  report.seed = seed;
  report.hyper = hyper;
  report.hyper.config = config_for(images, hyper.config);
  report.bands = options.bands;

  std::vector<std::optional<double>> acc, sens, spec, subj;
  for (std::size_t f = 0; f < plan.k; ++f) {
    ModelHyper fold_hyper = hyper;
    fold_hyper.train.seed = derive_seed(seed, f);
    capsnet::EpochCallback cb;
    if (options.progress) {
      cb = [&options, f](std::size_t epoch, double loss) {
        options.progress("fold " + std::to_string(f) + " epoch " + std::to_string(epoch + 1) +
                         " loss " + std::to_string(loss));
      };
    }
    const TrainedFold trained = train_fold(images, plan, f, fold_hyper, cb);

    FoldResult r;
    r.fold = f;
    r.test_subjects = plan.subjects_in(f);
    for (const auto& s : subjects) {
      if (plan.fold_of(s.id) != f) r.train_subjects.push_back(s.id);
    }
    std::sort(r.train_subjects.begin(), r.train_subjects.end());
    for (const auto& img : images) {
      (plan.fold_of(img.subject_id) == f ? r.test_images : r.train_images) += 1;
    }
    r.evaluation = evaluate_fold(images, plan, f, trained.config, trained.params, trained.normalizer);
    r.epoch_loss = trained.epoch_loss;

    acc.emplace_back(r.evaluation.epoch_level.accuracy);
    sens.push_back(r.evaluation.epoch_level.sensitivity);
    spec.push_back(r.evaluation.epoch_level.specificity);
    subj.emplace_back(r.evaluation.subject_level.accuracy);
    if (options.progress) {
      options.progress("fold " + std::to_string(f) + " accuracy " +
                       std::to_string(r.evaluation.epoch_level.accuracy));
    }
    report.folds.push_back(std::move(r));
  }
  report.accuracy = summarize(acc);
  report.sensitivity = summarize(sens);
  report.specificity = summarize(spec);
  report.subject_accuracy = summarize(subj);
  return report;
}

CVReport cross_validate(const CohortManifest& manifest, const PipelineConfig& pipeline,
                        const ModelHyper& hyper, std::uint64_t seed, const CVOptions& options) {
  const auto images = featurize_cohort(manifest, pipeline);
  CVOptions opts = options;
  opts.bands = pipeline.bands;
  return cross_validate_images(images, hyper, seed, opts);
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json metrics_json(const Metrics& m) {
  return {{"accuracy", m.accuracy},
          {"sensitivity", optional_json(m.sensitivity)},
          {"specificity", optional_json(m.specificity)},
          {"tp", m.tp},
          {"fp", m.fp},
          {"tn", m.tn},
          {"fn", m.fn}};
}

nlohmann::json summary_json(const MetricSummary& s) {
  return {{"mean", s.mean}, {"std", s.stddev}, {"folds", s.count}};
}

}  // namespace

std::string report_to_json(const CVReport& report) {
  using nlohmann::json;
  json doc;
  doc["seed"] = report.seed;
  const auto& c = report.hyper.config;
  doc["model"] = {{"in_channels", c.in_channels},       {"grid", c.grid},
                  {"conv1_filters", c.conv1_filters},   {"conv1_kernel", c.conv1_kernel},
                  {"conv1_stride", c.conv1_stride},     {"pc_capsule_dim", c.pc_capsule_dim},
                  {"pc_filters_per_dim", c.pc_filters_per_dim},
                  {"pc_kernel", c.pc_kernel},           {"pc_stride", c.pc_stride},
                  {"dc_num_classes", c.dc_num_classes}, {"dc_capsule_dim", c.dc_capsule_dim},
                  {"routing_iterations", c.routing_iterations}};
  const auto& t = report.hyper.train;
  doc["training"] = {{"learning_rate", t.adam.learning_rate},
                     {"beta1", t.adam.beta1},
                     {"beta2", t.adam.beta2},
                     {"epsilon", t.adam.epsilon},
                     {"epochs", t.epochs},
                     {"batch_size", t.batch_size}};
  json bands = json::array();
  for (Band b : report.bands) bands.push_back(std::string(to_string(b)));
  doc["bands"] = bands;

  json folds = json::array();
  for (const auto& f : report.folds) {
    folds.push_back({{"fold", f.fold},
                     {"train_subjects", f.train_subjects},
                     {"test_subjects", f.test_subjects},
                     {"train_images", f.train_images},
                     {"test_images", f.test_images},
                     {"epoch_level", metrics_json(f.evaluation.epoch_level)},
                     {"subject_level", metrics_json(f.evaluation.subject_level)},
                     {"epoch_loss", f.epoch_loss}});
  }
  doc["folds"] = folds;
  doc["summary"] = {{"accuracy", summary_json(report.accuracy)},
                    {"sensitivity", summary_json(report.sensitivity)},
                    {"specificity", summary_json(report.specificity)},
                    {"subject_accuracy", summary_json(report.subject_accuracy)}};
  return doc.dump(2) + "\n";
}

}  // namespace eegcaps
