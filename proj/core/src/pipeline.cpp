#include "eegcaps/error.hpp"
#include "eegcaps/experiment.hpp"

namespace eegcaps {

std::vector<FeatureImage> featurize_recording(const RawRecording& recording,
                                              std::size_t epochs_to_take,
                                              const PipelineConfig& pipeline,
                                              const ElectrodeLayout& layout) {
  const RawRecording ordered = conform_to_layout(recording, layout);
  const std::size_t taps =
      pipeline.fir_taps != 0 ? pipeline.fir_taps : default_fir_taps(ordered.sample_rate_hz);
  const FirFilter filter = design_bandpass_fir(pipeline.low_cut_hz, pipeline.high_cut_hz,
                                               ordered.sample_rate_hz, taps);
  const RawRecording filtered = apply_fir(ordered, filter);
  const auto pairs = segment_epochs(filtered);
  if (pairs.size() < epochs_to_take) {
    fail(ErrorCode::InsufficientData, recording.subject_id + ": " + std::to_string(pairs.size()) +
                                          " epochs available, " + std::to_string(epochs_to_take) +
                                          " requested");
  }

  const ProjectedLayout projected = project_aep(layout);
  const GridSpec grid = build_grid(projected);
  std::vector<FeatureImage> images;
  images.reserve(epochs_to_take);
  for (std::size_t e = 0; e < epochs_to_take; ++e) {
    const auto features = extract_features(pairs[e], ordered.sample_rate_hz, pipeline.welch);
    FeatureImage img = assemble_image(features, projected, grid, pipeline.assemble);
    img.subject_id = recording.subject_id;
    img.group = recording.group;
    img.epoch_index = pairs[e].index;
    images.push_back(std::move(img));
  }
  if (pipeline.bands.size() != kNumBands) return band_subset(images, pipeline.bands);
  return images;
}

std::vector<FeatureImage> featurize_cohort(const CohortManifest& manifest,
                                           const PipelineConfig& pipeline,
                                           const ElectrodeLayout& layout) {
  std::vector<FeatureImage> all;
  for (const auto& subject : manifest.subjects) {
    const RawRecording rec = read_recording_csv(manifest.recording_path(subject), subject.id,
                                                subject.group, subject.sample_rate_hz);
    auto images = featurize_recording(rec, subject.epochs_to_take, pipeline, layout);
    all.insert(all.end(), std::make_move_iterator(images.begin()),
               std::make_move_iterator(images.end()));
  }
  return all;
}

}  // namespace eegcaps
