// eegcaps: featurize, train, evaluate, cross-validate and synthesize cohorts.
//
// Exit status: 0 success, 2 invalid input or arguments, 3 file system errors.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "eegcaps/capsnet/checkpoint.hpp"
#include "eegcaps/error.hpp"
#include "eegcaps/experiment.hpp"
#include "eegcaps/synthgen.hpp"

namespace fs = std::filesystem;
using namespace eegcaps;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitIo = 3;

struct ModelFlags {
  double lr = 1e-3;
  std::size_t epochs = 30;
  std::size_t batch = 32;
  std::size_t routing_iters = 3;
  std::size_t conv1_filters = 256;

  void attach(CLI::App* app) {
    app->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
    app->add_option("--epochs", epochs, "training epochs")->capture_default_str();
    app->add_option("--batch", batch, "mini-batch size")->capture_default_str();
    app->add_option("--routing-iters", routing_iters, "dynamic routing iterations")->capture_default_str();
    app->add_option("--conv1-filters", conv1_filters, "filters in the first convolution")
        ->capture_default_str();
  }

  ModelHyper hyper() const {
    ModelHyper h;
    h.config.conv1_filters = conv1_filters;
    h.config.routing_iterations = routing_iters;
    h.train.adam.learning_rate = lr;
    h.train.epochs = epochs;
    h.train.batch_size = batch;
    return h;
  }
};

void log(const std::string& line) { std::cerr << line << '\n'; }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

PipelineConfig pipeline_from(const std::string& bands, bool log_power) {
  PipelineConfig p;
  p.bands = parse_band_list(bands);
  p.assemble.log_power = log_power;
  return p;
}

FoldPlan plan_for(std::span<const FeatureImage> images, std::uint64_t seed, std::size_t folds) {
  const auto subjects = subjects_of(images);
  return make_folds(subjects, folds, seed);
}

// ------------------------------------------------------------------ commands

int run_featurize(const fs::path& manifest_path, const fs::path& out_dir, const std::string& bands,
                  bool log_power) {
  const auto manifest = load_manifest(manifest_path);
  const auto images = featurize_cohort(manifest, pipeline_from(bands, log_power));
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());
  for (const auto& img : images) write_fimg(img, out_dir / fimg_filename(img));
  log("wrote " + std::to_string(images.size()) + " images to " + out_dir.string());
  return kExitOk;
}

int run_train(const fs::path& images_dir, std::uint64_t folds_seed, std::size_t fold_index,
              std::size_t folds, const fs::path& out, const ModelFlags& flags) {
  const auto images = read_fimg_dir(images_dir);
  if (images.empty()) fail(ErrorCode::EmptyTrainingSet, "no .fimg files in " + images_dir.string());
  const auto plan = plan_for(images, folds_seed, folds);
  if (fold_index >= plan.k) fail(ErrorCode::InvalidArgument, "fold index out of range");

  ModelHyper hyper = flags.hyper();
  hyper.train.seed = derive_seed(folds_seed, fold_index);
  const auto trained = train_fold(images, plan, fold_index, hyper, [](std::size_t e, double loss) {
    log("epoch " + std::to_string(e + 1) + " loss " + std::to_string(loss));
  });

  capsnet::Checkpoint ckpt;
  ckpt.config = trained.config;
  ckpt.params = trained.params.cast<double>();
  ckpt.context = capsnet::TrainingContext{trained.normalizer, folds_seed,
                                          static_cast<std::uint32_t>(fold_index),
                                          static_cast<std::uint32_t>(plan.k)};
  capsnet::save_checkpoint(ckpt, out);
  log("saved " + out.string());
  return kExitOk;
}

int run_evaluate(const fs::path& model_path, const fs::path& images_dir, std::size_t fold_index) {
  const auto ckpt = capsnet::load_checkpoint(model_path);
  if (!ckpt.context) {
    fail(ErrorCode::InvalidArgument, model_path.string() + " carries no fold or normalizer context");
  }
  const auto& ctx = *ckpt.context;
  const auto images = read_fimg_dir(images_dir);
  if (images.empty()) fail(ErrorCode::EmptyTestSet, "no .fimg files in " + images_dir.string());
  const auto plan = plan_for(images, ctx.folds_seed, ctx.num_folds);
  if (fold_index >= plan.k) fail(ErrorCode::InvalidArgument, "fold index out of range");
  if (fold_index != ctx.fold_index) {
    log("warning: model was trained with fold " + std::to_string(ctx.fold_index) +
        " held out; fold " + std::to_string(fold_index) + " was part of its training data");
  }
  const auto params = ckpt.params.cast<float>();
  const auto eval = evaluate_fold(images, plan, fold_index, ckpt.config, params, ctx.normalizer);
  std::cout << metrics_to_json(eval.epoch_level) << '\n';
  return kExitOk;
}

int run_cv(const fs::path& manifest_path, const std::string& bands, bool log_power,
           std::uint64_t seed, std::size_t folds, const fs::path& report_path,
           const ModelFlags& flags) {
  const auto start = std::chrono::steady_clock::now();
  const auto manifest = load_manifest(manifest_path);
  CVOptions options;
  options.k = folds;
  options.progress = log;
  const auto report = cross_validate(manifest, pipeline_from(bands, log_power), flags.hyper(), seed, options);
  write_text(report_path, report_to_json(report));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  char line[160];
  std::snprintf(line, sizeof line, "accuracy %.4f +- %.4f over %zu folds (%.1f s)", report.accuracy.mean,
                report.accuracy.stddev, report.accuracy.count, secs);
  std::cout << line << '\n';
  return kExitOk;
}

int run_synth(const fs::path& out, std::size_t hc, std::size_t pd, std::uint64_t seed, double effect_size,
              std::size_t epochs, double fs_hz) {
  EffectSpec effect;
  effect.effect_size = effect_size;
  CohortOptions opts;
  opts.epochs_to_take = epochs;
  opts.sample_rate_hz = fs_hz;
  const auto manifest = generate_cohort(hc, pd, effect, seed, out, opts);
  log("wrote " + std::to_string(manifest.subjects.size()) + " subjects to " + out.string());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG topographic feature images and capsule-network classification"};
  app.require_subcommand(1);

  std::string manifest, out, images, model, report, bands = "theta,alpha,beta,gamma";
  bool log_power = false;
  std::uint64_t seed = 0;
  std::size_t fold_index = 0, folds = 5;
  ModelFlags flags;

  auto* featurize = app.add_subcommand("featurize", "write .fimg feature images for a cohort");
  featurize->add_option("--manifest", manifest, "cohort manifest JSON")->required();
  featurize->add_option("--out", out, "output directory")->required();
  featurize->add_option("--bands", bands, "comma-separated band list")->capture_default_str();
  featurize->add_flag("--log-power", log_power, "interpolate log10 band power");

  auto* train = app.add_subcommand("train", "train one fold from .fimg images");
  train->add_option("--images", images, "directory of .fimg files")->required();
  train->add_option("--folds-seed", seed, "seed of the subject-wise fold plan")->required();
  train->add_option("--fold-index", fold_index, "held-out fold")->required();
  train->add_option("--folds", folds, "number of folds")->capture_default_str();
  train->add_option("--out", out, "checkpoint path")->required();
  flags.attach(train);

  auto* evaluate = app.add_subcommand("evaluate", "print held-out metrics as JSON");
  evaluate->add_option("--model", model, "checkpoint written by train")->required();
  evaluate->add_option("--images", images, "directory of .fimg files")->required();
  evaluate->add_option("--fold-index", fold_index, "fold to evaluate")->required();

  auto* cv = app.add_subcommand("cv", "subject-wise k-fold cross-validation");
  cv->add_option("--manifest", manifest, "cohort manifest JSON")->required();
  cv->add_option("--bands", bands, "comma-separated band list")->capture_default_str();
  cv->add_flag("--log-power", log_power, "interpolate log10 band power");
  cv->add_option("--seed", seed, "fold and training seed")->required();
  cv->add_option("--folds", folds, "number of folds")->capture_default_str();
  cv->add_option("--report", report, "report JSON path")->required();
  flags.attach(cv);

  std::size_t hc = 6, pd = 6, synth_epochs = 30;
  double effect_size = 2.0, synth_fs = 200.0;
  auto* synth = app.add_subcommand("synth", "generate a synthetic cohort (test fixture)");
  synth->add_option("--out", out, "output directory")->required();
  synth->add_option("--hc", hc, "healthy-control subjects")->capture_default_str();
  synth->add_option("--pd", pd, "PD subjects")->capture_default_str();
  synth->add_option("--seed", seed, "cohort seed")->required();
  synth->add_option("--effect-size", effect_size, "PD band-power effect")->capture_default_str();
  synth->add_option("--epochs-per-subject", synth_epochs, "epoch pairs per subject")->capture_default_str();
  synth->add_option("--sample-rate", synth_fs, "sample rate in Hz")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (featurize->parsed()) return run_featurize(manifest, out, bands, log_power);
    if (train->parsed()) return run_train(images, seed, fold_index, folds, out, flags);
    if (evaluate->parsed()) return run_evaluate(model, images, fold_index);
    if (cv->parsed()) return run_cv(manifest, bands, log_power, seed, folds, report, flags);
    if (synth->parsed()) return run_synth(out, hc, pd, seed, effect_size, synth_epochs, synth_fs);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::IoError ? kExitIo : kExitInvalid;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}
