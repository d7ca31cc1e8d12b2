#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

#include "eegcaps/experiment.hpp"
#include "eegcaps/synthgen.hpp"
#include "test_util.hpp"

using namespace eegcaps;
using testutil::code_of;
using testutil::TempDir;

namespace {

std::vector<SubjectRef> cohort_refs(std::size_t n_hc, std::size_t n_pd) {
  std::vector<SubjectRef> out;
  for (std::size_t i = 0; i < n_hc; ++i) out.push_back({"hc" + std::to_string(i), Group::HC});
  for (std::size_t i = 0; i < n_pd; ++i) out.push_back({"pd" + std::to_string(i), Group::PD});
  return out;
}

std::map<std::size_t, std::pair<std::size_t, std::size_t>> fold_counts(const FoldPlan& plan,
                                                                         std::span<const SubjectRef> subjects) {
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& s : subjects) {
    auto& c = counts[plan.fold_of(s.id)];
    (s.group == Group::HC ? c.first : c.second) += 1;
  }
  return counts;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

// ------------------------------------------------------------------ manifest

const char* kTwoSubjects = R"({
  "schema_version": 1,
  "subjects": [
    {"id": "HC001", "group": "HC", "path": "HC001", "sample_rate_hz": 1000, "epochs_to_take": 165},
    {"id": "PD001", "group": "PD", "path": "PD001", "sample_rate_hz": 1000, "epochs_to_take": 90}
  ]
})";

TEST(Manifest, LoadsWellFormedFile) {
  TempDir dir("manifest");
  write_text(dir / "manifest.json", kTwoSubjects);
  write_text(dir / "HC001/recording.csv", "");
  write_text(dir / "PD001/recording.csv", "");
  const auto m = load_manifest(dir / "manifest.json");
  ASSERT_EQ(m.subjects.size(), 2u);
  EXPECT_EQ(m.subjects[1].group, Group::PD);
  EXPECT_EQ(m.subjects[1].epochs_to_take, 90u);
  EXPECT_EQ(m.recording_path(m.subjects[0]), dir / "HC001" / "recording.csv");
  // serialize and reparse
  const auto again = parse_manifest(manifest_to_json(m), m.base_dir);
  ASSERT_EQ(again.subjects.size(), 2u);
  EXPECT_EQ(again.subjects[0].id, "HC001");
  EXPECT_EQ(again.subjects[0].epochs_to_take, 165u);
}

TEST(Manifest, MissingRecording) {
  TempDir dir("manifest_missing");
  write_text(dir / "manifest.json", kTwoSubjects);
  write_text(dir / "HC001/recording.csv", "");
  EXPECT_EQ(code_of([&] { load_manifest(dir / "manifest.json"); }), ErrorCode::MissingRecording);
}

TEST(Manifest, DuplicateSubject) {
  std::string text = kTwoSubjects;
  text.replace(text.find("\"PD001\""), 7, "\"HC001\"");
  EXPECT_EQ(code_of([&] { parse_manifest(text, "."); }), ErrorCode::DuplicateSubject);
}

TEST(Manifest, ParseErrors) {
  EXPECT_EQ(code_of([] { parse_manifest("{not json", "."); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_manifest(R"({"schema_version": 1})", "."); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_manifest(R"({"schema_version": 2, "subjects": []})", "."); }),
            ErrorCode::ParseError);
  EXPECT_EQ(code_of([] {
              parse_manifest(R"({"subjects": [{"id": "a", "group": "XX", "path": "a",
                               "sample_rate_hz": 1000, "epochs_to_take": 1}]})", ".");
            }),
            ErrorCode::ParseError);
  EXPECT_EQ(code_of([] {
              parse_manifest(R"({"subjects": [{"id": "a", "group": "HC", "path": "a",
                               "sample_rate_hz": 1000, "epochs_to_take": 0}]})", ".");
            }),
            ErrorCode::ParseError);
  EXPECT_EQ(code_of([] {
              parse_manifest(R"({"subjects": [{"id": "a", "group": "HC", "path": "a"}]})", ".");
            }),
            ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { load_manifest("/nonexistent/manifest.json"); }), ErrorCode::IoError);
}

// --------------------------------------------------------------------- folds

TEST(Folds, ThirtyHcFiftyFivePd) {
  const auto subjects = cohort_refs(30, 55);
  const auto plan = make_folds(subjects, 5, 2024);
  const auto counts = fold_counts(plan, subjects);
  ASSERT_EQ(counts.size(), 5u);
  for (const auto& [fold, c] : counts) {
    EXPECT_EQ(c.first, 6u) << "fold " << fold;
    EXPECT_EQ(c.second, 11u) << "fold " << fold;
  }
}

TEST(Folds, FiveAndFive) {
  const auto subjects = cohort_refs(5, 5);
  const auto counts = fold_counts(make_folds(subjects, 5, 1), subjects);
  for (const auto& [fold, c] : counts) {
    EXPECT_EQ(c.first, 1u);
    EXPECT_EQ(c.second, 1u);
  }
}

TEST(Folds, TooFewSubjects) {
  const auto subjects = cohort_refs(3, 10);
  EXPECT_EQ(code_of([&] { make_folds(subjects, 5, 1); }), ErrorCode::FoldImbalance);
}

TEST(Folds, BalancedAndDisjointForAnyCohortSize) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> size(5, 60);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n_hc = size(rng), n_pd = size(rng);
    const auto subjects = cohort_refs(n_hc, n_pd);
    const auto plan = make_folds(subjects, 5, rng());
    EXPECT_EQ(plan.assignment.size(), n_hc + n_pd);
    std::size_t lo_hc = 1000, hi_hc = 0, lo_pd = 1000, hi_pd = 0, seen = 0;
    for (std::size_t f = 0; f < 5; ++f) {
      std::size_t hc = 0, pd = 0;
      for (const auto& id : plan.subjects_in(f)) (id.starts_with("hc") ? hc : pd) += 1;
      seen += hc + pd;
      lo_hc = std::min(lo_hc, hc);
      hi_hc = std::max(hi_hc, hc);
      lo_pd = std::min(lo_pd, pd);
      hi_pd = std::max(hi_pd, pd);
    }
    EXPECT_EQ(seen, n_hc + n_pd);
    EXPECT_LE(hi_hc - lo_hc, 1u);
    EXPECT_LE(hi_pd - lo_pd, 1u);
  }
}

TEST(Folds, SeededAndOrderIndependent) {
  auto subjects = cohort_refs(12, 14);
  const auto a = make_folds(subjects, 5, 77);
  std::mt19937_64 rng(1);
  std::shuffle(subjects.begin(), subjects.end(), rng);
  const auto b = make_folds(subjects, 5, 77);
  EXPECT_EQ(a.assignment, b.assignment);
  EXPECT_NE(make_folds(subjects, 5, 78).assignment, a.assignment);
}

TEST(Folds, LabelShuffleIsBalanced) {
  const auto subjects = cohort_refs(10, 13);
  const auto labels = balanced_label_shuffle(subjects, 5);
  std::size_t pd = 0, flipped_hc = 0, flipped_pd = 0;
  for (const auto& s : subjects) {
    const Group g = labels.at(s.id);
    pd += g == Group::PD;
    if (g != s.group) (s.group == Group::HC ? flipped_hc : flipped_pd) += 1;
  }
  EXPECT_EQ(pd, 13u);
  EXPECT_EQ(flipped_hc, 5u);
  EXPECT_EQ(flipped_pd, 5u);
  EXPECT_EQ(balanced_label_shuffle(subjects, 5), labels);
}

TEST(Seeds, DerivedStreamsDiffer) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 4; ++s) {
    for (std::uint64_t k = 0; k < 50; ++k) seen.insert(derive_seed(s, k));
  }
  EXPECT_EQ(seen.size(), 200u);
}

// ------------------------------------------------------------------- metrics

TEST(Metrics, FromCounts) {
  const auto m = metrics_from_counts(8, 1, 9, 2);
  EXPECT_NEAR(*m.sensitivity, 0.8, 1e-15);
  EXPECT_NEAR(*m.specificity, 0.9, 1e-15);
  EXPECT_NEAR(m.accuracy, 0.85, 1e-15);
  EXPECT_EQ(code_of([] { metrics_from_counts(0, 0, 0, 0); }), ErrorCode::EmptyTestSet);
}

TEST(Metrics, PerfectAndConstantPredictors) {
  std::vector<Group> truth(20, Group::HC);
  std::fill(truth.begin(), truth.begin() + 10, Group::PD);
  const auto perfect = metrics_from_predictions(truth, truth);
  EXPECT_EQ(perfect.accuracy, 1.0);
  EXPECT_EQ(*perfect.sensitivity, 1.0);
  EXPECT_EQ(*perfect.specificity, 1.0);
  const std::vector<Group> all_hc(20, Group::HC);
  const auto lazy = metrics_from_predictions(truth, all_hc);
  EXPECT_EQ(lazy.accuracy, 0.5);
  EXPECT_EQ(*lazy.sensitivity, 0.0);
  EXPECT_EQ(*lazy.specificity, 1.0);
}

TEST(Metrics, AbsentRatesAndIdentities) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<Group> truth, pred;
    const bool only_hc = trial % 7 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      truth.push_back(only_hc ? Group::HC : static_cast<Group>(rng() % 2));
      pred.push_back(static_cast<Group>(rng() % 2));
    }
    const auto m = metrics_from_predictions(truth, pred);
    EXPECT_EQ(m.total(), n);
    EXPECT_NEAR(m.accuracy * static_cast<double>(n), static_cast<double>(m.tp + m.tn), 1e-9);
    const bool has_pos = std::count(truth.begin(), truth.end(), Group::PD) > 0;
    EXPECT_EQ(m.sensitivity.has_value(), has_pos);
    if (only_hc) EXPECT_FALSE(m.sensitivity.has_value());
  }
}

TEST(Metrics, SummaryIsPopulationStatistics) {
  const std::vector<std::optional<double>> v{0.8, 0.9, std::nullopt, 1.0, 0.7};
  const auto s = summarize(v);
  EXPECT_EQ(s.count, 4u);
  EXPECT_NEAR(s.mean, 0.85, 1e-15);
  EXPECT_NEAR(s.stddev, std::sqrt((0.0025 + 0.0025 + 0.0225 + 0.0225) / 4.0), 1e-15);
  const std::vector<std::optional<double>> none{std::nullopt};
  EXPECT_EQ(summarize(none).count, 0u);
}

TEST(Metrics, JsonHasNullForAbsentRates) {
  const auto m = metrics_from_counts(0, 1, 3, 0);
  const auto j = nlohmann::json::parse(metrics_to_json(m));
  EXPECT_TRUE(j["sensitivity"].is_null());
  EXPECT_EQ(j["specificity"].get<double>(), 0.75);
  EXPECT_EQ(j["tn"].get<int>(), 3);
}

// ---------------------------------------------------------- images and model

std::vector<FeatureImage> small_images(std::size_t n_hc, std::size_t n_pd, std::size_t per_subject,
                                       std::uint64_t seed, double separation) {
  // 2 x 12 x 12 images; PD images carry a constant offset on channel 1.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise;
  std::vector<FeatureImage> out;
  const auto subjects = cohort_refs(n_hc, n_pd);
  for (const auto& s : subjects) {
    for (std::size_t e = 0; e < per_subject; ++e) {
      FeatureImage img;
      img.channels = 2;
      img.height = img.width = 12;
      img.subject_id = s.id;
      img.group = s.group;
      img.epoch_index = e;
      img.data.resize(2 * 144);
      for (std::size_t k = 0; k < img.data.size(); ++k) {
        img.data[k] = noise(rng) + (s.group == Group::PD && k >= 144 ? separation : 0.0);
      }
      out.push_back(std::move(img));
    }
  }
  return out;
}

TEST(Evaluate, ZeroTransformGivesTiesAndHcPredictions) {
  const auto cfg = capsnet::ModelConfig::gradient_check();
  auto params = capsnet::init_params<double>(cfg, 1);
  params.W.fill(0.0);
  const auto imgs = small_images(3, 4, 2, 1, 0.0);
  const auto m = evaluate(params, cfg, imgs);
  EXPECT_EQ(m.tp + m.fp, 0u);
  EXPECT_NEAR(m.accuracy, 6.0 / 14.0, 1e-15);
  EXPECT_EQ(*m.sensitivity, 0.0);
  EXPECT_EQ(*m.specificity, 1.0);
  EXPECT_EQ(code_of([&] { evaluate(params, cfg, std::span<const FeatureImage>{}); }),
            ErrorCode::EmptyTestSet);
}

TEST(BandSubsetHarness, AllFourBandsIsIdentity) {
  std::vector<FeatureImage> imgs(2);
  std::mt19937_64 rng(2);
  for (auto& img : imgs) {
    img.data.resize(8 * 1024);
    for (auto& v : img.data) v = static_cast<double>(rng() % 1000);
  }
  const auto same = band_subset(imgs, kAllBands);
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    EXPECT_EQ(same[i].channels, 8u);
    EXPECT_EQ(same[i].data, imgs[i].data);
  }
}

TEST(TrainFold, NeverTouchesHeldOutSubjects) {
  auto imgs = small_images(5, 5, 3, 3, 1.0);
  const auto subjects = subjects_of(imgs);
  const auto plan = make_folds(subjects, 5, 9);
  // Poison the held-out fold: any use in training or normalizer fitting shows up as NaN.
  for (auto& img : imgs) {
    if (plan.fold_of(img.subject_id) == 2) std::fill(img.data.begin(), img.data.end(), std::nan(""));
  }
  ModelHyper hyper;
  hyper.config = capsnet::ModelConfig::gradient_check();
  hyper.train.epochs = 2;
  hyper.train.batch_size = 8;
  const auto trained = train_fold(imgs, plan, 2, hyper);
  for (double m : trained.normalizer.mean) EXPECT_TRUE(std::isfinite(m));
  for (const auto* t : trained.params.tensors()) EXPECT_TRUE(capsnet::all_finite(t->span()));
  EXPECT_EQ(trained.config.in_channels, 2u);
  EXPECT_EQ(trained.epoch_loss.size(), 2u);
}

TEST(CrossValidation, ReportAggregatesFoldsAndIsDeterministic) {
  const auto imgs = small_images(5, 6, 4, 5, 1.5);
  ModelHyper hyper;
  hyper.config = capsnet::ModelConfig::gradient_check();
  hyper.train.epochs = 4;
  hyper.train.batch_size = 8;
  const auto report = cross_validate_images(imgs, hyper, 31);
  ASSERT_EQ(report.folds.size(), 5u);

  std::vector<double> acc;
  std::set<std::string> tested;
  for (const auto& f : report.folds) {
    acc.push_back(f.evaluation.epoch_level.accuracy);
    for (const auto& id : f.test_subjects) {
      EXPECT_TRUE(tested.insert(id).second) << id << " tested twice";
      EXPECT_EQ(std::count(f.train_subjects.begin(), f.train_subjects.end(), id), 0);
    }
    EXPECT_EQ(f.train_images + f.test_images, imgs.size());
    EXPECT_EQ(f.test_images, 4 * f.test_subjects.size());
  }
  EXPECT_EQ(tested.size(), 11u);
  double mean = 0.0;
  for (double a : acc) mean += a;
  mean /= 5.0;
  double var = 0.0;
  for (double a : acc) var += (a - mean) * (a - mean);
  EXPECT_NEAR(report.accuracy.mean, mean, 1e-12);
  EXPECT_NEAR(report.accuracy.stddev, std::sqrt(var / 5.0), 1e-12);
  EXPECT_EQ(report.accuracy.count, 5u);

  const auto again = cross_validate_images(imgs, hyper, 31);
  EXPECT_EQ(report_to_json(again), report_to_json(report));
  const auto j = nlohmann::json::parse(report_to_json(report));
  EXPECT_EQ(j["folds"].size(), 5u);
  EXPECT_EQ(j["model"]["in_channels"].get<int>(), 2);
  EXPECT_EQ(j["seed"].get<std::uint64_t>(), 31u);
}

// -------------------------------------------------------------- featurization

TEST(Featurize, RecordingToImages) {
  EffectSpec effect;
  const auto rec = generate_recording("PD001", Group::PD, 40.0, 200.0, effect, 3);
  PipelineConfig pipeline;
  const auto imgs = featurize_recording(rec, 3, pipeline);
  ASSERT_EQ(imgs.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_EQ(imgs[e].channels, 8u);
    EXPECT_EQ(imgs[e].height, 32u);
    EXPECT_EQ(imgs[e].epoch_index, e);
    EXPECT_EQ(imgs[e].subject_id, "PD001");
    EXPECT_EQ(imgs[e].group, Group::PD);
    for (double v : imgs[e].data) EXPECT_GE(v, 0.0);
  }
  pipeline.bands = {Band::Gamma};
  const auto gamma = featurize_recording(rec, 3, pipeline);
  EXPECT_EQ(gamma[0].channels, 2u);
  for (std::size_t k = 0; k < gamma[0].plane_size(); ++k) {
    EXPECT_EQ(gamma[0].data[k], imgs[0].data[3 * 1024 + k]);
  }
  EXPECT_EQ(code_of([&] { featurize_recording(rec, 5, PipelineConfig{}); }), ErrorCode::InsufficientData);
}

}  // namespace
