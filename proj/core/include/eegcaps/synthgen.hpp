#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eegcaps/common.hpp"
#include "eegcaps/experiment.hpp"
#include "eegcaps/signal.hpp"

namespace eegcaps {

// Synthetic test fixture: group differences are injected so that the pipeline
// has something to find. This carries no clinical meaning.
struct EffectSpec {
  double effect_size = 2.0;
  // Channels whose PD amplitudes are scaled.
  std::vector<std::string> affected_channels = {"C3", "Cz", "C4"};
  double noise_std = 1.0;  // uV, white
  // Per-tone amplitude (uV) for theta, alpha, beta, gamma before any scaling.
  std::array<double, kNumBands> base_amplitude = {2.0, 3.0, 1.0, 0.6};
  double closed_alpha_gain = 1.5;

  // PD amplitude factor per band on affected channels:
  // theta 1 + E/2, alpha 1, beta 1, gamma 1 + E.
  std::array<double, kNumBands> pd_factors() const;
};

inline constexpr std::size_t kTonesPerBand = 5;

// First half eyes open, second half eyes closed. Each channel is a sum of five
// random-phase tones per band (uniform in-band frequencies) plus white noise,
// with per-subject and per-channel amplitude jitter in [0.8, 1.2].
RawRecording generate_recording(const std::string& subject_id, Group group, double duration_s,
                                double sample_rate_hz, const EffectSpec& effect,
                                std::uint64_t seed);

struct CohortOptions {
  std::size_t epochs_to_take = 30;
  double sample_rate_hz = 200.0;
};

// Writes <out_dir>/<id>/recording.csv for every subject and
// <out_dir>/manifest.json. Subject k draws from derive_seed(seed, k).
CohortManifest generate_cohort(std::size_t n_hc, std::size_t n_pd, const EffectSpec& effect,
                               std::uint64_t seed, const std::filesystem::path& out_dir,
                               const CohortOptions& options = {});

// In-memory variant of generate_cohort (no files); manifest paths are the
// subject ids.
struct SyntheticCohort {
  CohortManifest manifest;
  std::vector<RawRecording> recordings;
};
SyntheticCohort generate_cohort_in_memory(std::size_t n_hc, std::size_t n_pd,
                                          const EffectSpec& effect, std::uint64_t seed,
                                          const CohortOptions& options = {});

}  // namespace eegcaps
