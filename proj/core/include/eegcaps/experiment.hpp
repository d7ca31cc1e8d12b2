#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eegcaps/capsnet/checkpoint.hpp"
#include "eegcaps/capsnet/model.hpp"
#include "eegcaps/capsnet/train.hpp"
#include "eegcaps/common.hpp"
#include "eegcaps/signal.hpp"
#include "eegcaps/topomap.hpp"

namespace eegcaps {

// ---------------------------------------------------------------------------
// Manifest (JSON): {"schema_version": 1, "subjects": [{"id", "group", "path",
// "sample_rate_hz", "epochs_to_take"}]}. `path` is the subject directory holding
// recording.csv, relative to the manifest file.

inline constexpr int kManifestSchemaVersion = 1;

struct SubjectEntry {
  std::string id;
  Group group = Group::HC;
  std::filesystem::path path;  // as written in the manifest
  double sample_rate_hz = 1000.0;
  std::size_t epochs_to_take = 1;
};

struct CohortManifest {
  int schema_version = kManifestSchemaVersion;
  std::vector<SubjectEntry> subjects;
  std::filesystem::path base_dir;  // directory of the manifest file

  std::filesystem::path recording_path(const SubjectEntry& subject) const;
};

CohortManifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir);
CohortManifest load_manifest(const std::filesystem::path& path);
std::string manifest_to_json(const CohortManifest& manifest);
void write_manifest(const CohortManifest& manifest, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Subject-wise folds

struct SubjectRef {
  std::string id;
  Group group = Group::HC;
};

std::vector<SubjectRef> subjects_of(const CohortManifest& manifest);
// Distinct subjects in the order they first appear.
std::vector<SubjectRef> subjects_of(std::span<const FeatureImage> images);

struct FoldPlan {
  std::size_t k = 5;
  std::map<std::string, std::size_t> assignment;
  std::uint64_t seed = 0;

  std::size_t fold_of(const std::string& subject_id) const;
  std::vector<std::string> subjects_in(std::size_t fold) const;
};

// Subjects are sorted by id within each group, shuffled from the seed, then
// dealt round-robin onto folds 0..k-1 (remainders land on the low folds).
FoldPlan make_folds(std::span<const SubjectRef> subjects, std::size_t k, std::uint64_t seed);
FoldPlan make_folds(const CohortManifest& manifest, std::size_t k, std::uint64_t seed);

// Swaps labels between floor(min(#HC, #PD) / 2) randomly chosen subjects of
// each group, so group sizes are preserved and half of the smaller group ends
// up mislabelled.
std::map<std::string, Group> balanced_label_shuffle(std::span<const SubjectRef> subjects,
                                                    std::uint64_t seed);
void relabel(std::vector<FeatureImage>& images, const std::map<std::string, Group>& labels);

// ---------------------------------------------------------------------------
// Metrics (PD is the positive class)

struct Metrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  std::optional<double> sensitivity;  // absent without positives
  std::optional<double> specificity;  // absent without negatives

  std::size_t total() const { return tp + fp + tn + fn; }
};

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);
// Throws EmptyTestSet on empty input.
Metrics metrics_from_predictions(std::span<const Group> truth, std::span<const Group> predicted);

template <typename T>
Metrics evaluate(const capsnet::ModelParams<T>& params, const capsnet::ModelConfig& config,
                 std::span<const FeatureImage> test_images);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population (divide by count)
  std::size_t count = 0;
};

// Mean and population std over the values that are present.
MetricSummary summarize(std::span<const std::optional<double>> values);

// ---------------------------------------------------------------------------
// Featurization

struct PipelineConfig {
  double low_cut_hz = 0.5;
  double high_cut_hz = 45.0;
  std::size_t fir_taps = 0;  // 0 selects default_fir_taps(sample rate)
  WelchParams welch;
  AssembleOptions assemble;
  std::vector<Band> bands{kAllBands.begin(), kAllBands.end()};
};

// load -> conform to layout -> FIR -> epochs -> first epochs_to_take pairs ->
// band powers -> 8-plane images -> band subset.
std::vector<FeatureImage> featurize_recording(const RawRecording& recording,
                                              std::size_t epochs_to_take,
                                              const PipelineConfig& pipeline,
                                              const ElectrodeLayout& layout = default_layout());
std::vector<FeatureImage> featurize_cohort(const CohortManifest& manifest,
                                           const PipelineConfig& pipeline,
                                           const ElectrodeLayout& layout = default_layout());

// ---------------------------------------------------------------------------
// Training harness and cross-validation

struct ModelHyper {
  capsnet::ModelConfig config;  // in_channels is overwritten from the images
  capsnet::TrainHyper train;
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the combined value
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct TrainedFold {
  capsnet::ModelConfig config;
  capsnet::ModelParams<float> params;
  Normalizer normalizer;
  std::vector<double> epoch_loss;
};

// Fits the normalizer and the model on the images of every fold except
// `fold_index`. Test-fold images are never touched.
TrainedFold train_fold(std::span<const FeatureImage> images, const FoldPlan& plan,
                       std::size_t fold_index, const ModelHyper& hyper,
                       const capsnet::EpochCallback& on_epoch = {});

struct FoldEvaluation {
  Metrics epoch_level;
  Metrics subject_level;  // majority vote per subject, ties to HC
};

FoldEvaluation evaluate_fold(std::span<const FeatureImage> images, const FoldPlan& plan,
                             std::size_t fold_index, const capsnet::ModelConfig& config,
                             const capsnet::ModelParams<float>& params, const Normalizer& norm);

struct FoldResult {
  std::size_t fold = 0;
  std::vector<std::string> train_subjects;
  std::vector<std::string> test_subjects;
  std::size_t train_images = 0;
  std::size_t test_images = 0;
  FoldEvaluation evaluation;
  std::vector<double> epoch_loss;
};

struct CVReport {
  std::vector<FoldResult> folds;
  MetricSummary accuracy;
  MetricSummary sensitivity;
  MetricSummary specificity;
  MetricSummary subject_accuracy;
  std::uint64_t seed = 0;
  ModelHyper hyper;
  std::vector<Band> bands;
};

struct CVOptions {
  std::size_t k = 5;
  std::vector<Band> bands{kAllBands.begin(), kAllBands.end()};  // recorded in the report
  std::function<void(const std::string&)> progress;
};

// Folds come from make_folds(subjects, k, seed); fold f trains from
// derive_seed(seed, f).
CVReport cross_validate_images(std::span<const FeatureImage> images, const ModelHyper& hyper,
                               std::uint64_t seed, const CVOptions& options = {});
CVReport cross_validate(const CohortManifest& manifest, const PipelineConfig& pipeline,
                        const ModelHyper& hyper, std::uint64_t seed,
                        const CVOptions& options = {});

std::string metrics_to_json(const Metrics& metrics);
std::string report_to_json(const CVReport& report);

}  // namespace eegcaps
