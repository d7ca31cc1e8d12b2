#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "eegcaps/error.hpp"
#include "eegcaps/synthgen.hpp"
#include "eegcaps/topomap.hpp"

namespace eegcaps {

std::array<double, kNumBands> EffectSpec::pd_factors() const {
  return {1.0 + effect_size / 2.0, 1.0, 1.0, 1.0 + effect_size};
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  // 53 random bits, independent of the library's distribution code.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

}  // namespace

RawRecording generate_recording(const std::string& subject_id, Group group, double duration_s,
                                double sample_rate_hz, const EffectSpec& effect,
                                std::uint64_t seed) {
  if (!(sample_rate_hz > 90.0)) fail(ErrorCode::InvalidArgument, "sample rate must exceed 90 Hz");
  const double epoch_pair_s = 2.0 * kEpochSeconds;
  if (!(duration_s >= epoch_pair_s)) {
    fail(ErrorCode::DurationTooShort, "duration must cover at least one 5 s + 5 s epoch");
  }
  const auto factors = effect.pd_factors();
  for (double f : factors) {
    if (!(f > 0.0)) fail(ErrorCode::InvalidArgument, "band factors must be positive");
  }
  const auto& layout = default_layout();
  std::vector<bool> affected(kNumChannels, false);
  for (const auto& label : effect.affected_channels) {
    const auto idx = layout.find(label);
    if (idx == layout.size()) fail(ErrorCode::InvalidArgument, "unknown channel " + label);
    affected[idx] = true;
  }

  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  const std::size_t half = n / 2;

  RawRecording rec;
  rec.subject_id = subject_id;
  rec.group = group;
  rec.sample_rate_hz = sample_rate_hz;
  for (const auto& e : layout.entries) rec.channel_labels.push_back(e.label);
  rec.samples = Matrix(kNumChannels, n);
  rec.eye_state_track.assign(n, EyeState::Open);
  std::fill(rec.eye_state_track.begin() + static_cast<std::ptrdiff_t>(half),
            rec.eye_state_track.end(), EyeState::Closed);

  std::mt19937_64 rng(seed);
  std::array<double, kNumBands> subject_gain{};
  for (auto& g : subject_gain) g = uniform(rng, 0.8, 1.2);

  const double dt = 1.0 / sample_rate_hz;
  std::normal_distribution<double> noise(0.0, effect.noise_std);
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    auto row = rec.samples.row(ch);
    for (Band band : kAllBands) {
      const auto b = static_cast<std::size_t>(band);
      double amp = effect.base_amplitude[b] * subject_gain[b] * uniform(rng, 0.8, 1.2);
      if (group == Group::PD && affected[ch]) amp *= factors[b];
      const double closed_gain = band == Band::Alpha ? effect.closed_alpha_gain : 1.0;
      const auto [low, high] = band_edges(band);
      for (std::size_t tone = 0; tone < kTonesPerBand; ++tone) {
        const double freq = uniform(rng, low, high);
        const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        const double w = 2.0 * std::numbers::pi * freq * dt;
        for (std::size_t i = 0; i < n; ++i) {
          const double a = i < half ? amp : amp * closed_gain;
          row[i] += a * std::sin(w * static_cast<double>(i) + phase);
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) row[i] += noise(rng);
  }
  validate_recording(rec);
  return rec;
}

namespace {

std::string subject_name(Group group, std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", group == Group::PD ? "PD" : "HC", k + 1);
  return buf;
}

}  // namespace

SyntheticCohort generate_cohort_in_memory(std::size_t n_hc, std::size_t n_pd,
                                          const EffectSpec& effect, std::uint64_t seed,
                                          const CohortOptions& options) {
  if (n_hc < 1 || n_pd < 1) fail(ErrorCode::InvalidArgument, "need at least one subject per group");
  if (options.epochs_to_take < 1) fail(ErrorCode::InvalidArgument, "epochs_to_take must be positive");
  const double duration = 2.0 * kEpochSeconds * static_cast<double>(options.epochs_to_take);

  SyntheticCohort cohort;
  std::size_t index = 0;
  for (Group group : {Group::HC, Group::PD}) {
    const std::size_t count = group == Group::HC ? n_hc : n_pd;
    for (std::size_t k = 0; k < count; ++k, ++index) {
      SubjectEntry e;
      e.id = subject_name(group, k);
      e.group = group;
      e.path = e.id;
      e.sample_rate_hz = options.sample_rate_hz;
      e.epochs_to_take = options.epochs_to_take;
      cohort.recordings.push_back(generate_recording(e.id, group, duration, options.sample_rate_hz,
                                                     effect, derive_seed(seed, index)));
      cohort.manifest.subjects.push_back(std::move(e));
    }
  }
  return cohort;
}

CohortManifest generate_cohort(std::size_t n_hc, std::size_t n_pd, const EffectSpec& effect,
                               std::uint64_t seed, const std::filesystem::path& out_dir,
                               const CohortOptions& options) {
  if (n_hc < 1 || n_pd < 1) fail(ErrorCode::InvalidArgument, "need at least one subject per group");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

  const double duration = 2.0 * kEpochSeconds * static_cast<double>(options.epochs_to_take);
  CohortManifest manifest;
  manifest.base_dir = out_dir;
  std::size_t index = 0;
  for (Group group : {Group::HC, Group::PD}) {
    const std::size_t count = group == Group::HC ? n_hc : n_pd;
    for (std::size_t k = 0; k < count; ++k, ++index) {
      SubjectEntry e;
      e.id = subject_name(group, k);
      e.group = group;
      e.path = e.id;
      e.sample_rate_hz = options.sample_rate_hz;
      e.epochs_to_take = options.epochs_to_take;
      const RawRecording rec = generate_recording(e.id, group, duration, options.sample_rate_hz,
                                                  effect, derive_seed(seed, index));
      std::filesystem::create_directories(out_dir / e.path, ec);
      if (ec) fail(ErrorCode::IoError, "cannot create subject directory: " + ec.message());
      write_recording_csv(rec, manifest.recording_path(e));
      manifest.subjects.push_back(std::move(e));
    }
  }
  write_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

}  // namespace eegcaps
