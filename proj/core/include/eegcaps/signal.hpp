#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "eegcaps/common.hpp"

namespace eegcaps {

// Cleaned multi-channel recording. samples is [channel x sample] in microvolts.
struct RawRecording {
  std::string subject_id;
  Group group = Group::HC;
  double sample_rate_hz = 1000.0;
  std::vector<std::string> channel_labels;
  Matrix samples;
  std::vector<EyeState> eye_state_track;

  std::size_t num_channels() const { return samples.rows(); }
  std::size_t num_samples() const { return samples.cols(); }
};

// Throws InvalidRecording when any structural invariant is broken.
void validate_recording(const RawRecording& rec);

struct EpochPair {
  Matrix open_segment;
  Matrix closed_segment;
  std::string subject_id;
  Group group = Group::HC;
  std::size_t index = 0;
};

// 30 channels x 4 bands x 2 eye states, channel-major then band then state.
class BandPowerVector {
 public:
  static constexpr std::size_t kSize = kNumChannels * kNumBands * kNumEyeStates;

  static constexpr std::size_t offset(std::size_t channel, Band band, EyeState state) {
    return (channel * kNumBands + static_cast<std::size_t>(band)) * kNumEyeStates +
           static_cast<std::size_t>(state);
  }

  double& at(std::size_t channel, Band band, EyeState state) {
    return values[offset(channel, band, state)];
  }
  double at(std::size_t channel, Band band, EyeState state) const {
    return values[offset(channel, band, state)];
  }

  std::array<double, kSize> values{};
};

// ---------------------------------------------------------------------------
// FIR band-pass

struct FirFilter {
  std::vector<double> coefficients;
  double low_cut_hz = 0.5;
  double high_cut_hz = 45.0;
  double sample_rate_hz = 1000.0;

  std::size_t num_taps() const { return coefficients.size(); }
};

// Default tap count scales with the sample rate so the transition band stays
// constant in Hz: 2001 taps at 1000 Hz.
std::size_t default_fir_taps(double sample_rate_hz);

// Hamming-windowed sinc band-pass, built as the difference of two unit-DC-gain
// low-pass kernels so the DC response vanishes.
FirFilter design_bandpass_fir(double low_cut_hz, double high_cut_hz, double sample_rate_hz,
                              std::size_t n_taps);

std::complex<double> frequency_response(const FirFilter& filter, double freq_hz);

// Zero-phase (forward-backward) filtering of every channel with odd-reflection
// edge padding. Eye-state annotation is carried over unchanged.
RawRecording apply_fir(const RawRecording& recording, const FirFilter& filter);
std::vector<double> filtfilt(std::span<const double> x, std::span<const double> taps);

// ---------------------------------------------------------------------------
// Epochs

// Consecutive non-overlapping 5 s windows inside each maximal eye-state run,
// open windows paired with closed windows by temporal index.
std::vector<EpochPair> segment_epochs(const RawRecording& recording);

// ---------------------------------------------------------------------------
// Spectral estimation

struct WelchParams {
  double window_s = 1.0;
  double overlap_fraction = 0.5;
};

struct Psd {
  std::vector<double> frequencies;  // Hz, ascending, 0 .. fs/2
  std::vector<double> density;      // uV^2/Hz, one-sided
  double resolution_hz = 0.0;
};

// Welch estimate: mean-detrended, periodic-Hann-windowed segments, density
// scaling so that sum(density) * df equals the windowed signal variance.
Psd welch_psd(std::span<const double> segment, double sample_rate_hz,
              const WelchParams& params = {});

// Sum of density * df over bins with low <= f < high.
double integrate_psd(const Psd& psd, double low_hz, double high_hz);
double band_power(const Psd& psd, Band band);

BandPowerVector extract_features(const EpochPair& pair, double sample_rate_hz,
                                 const WelchParams& params = {});

// ---------------------------------------------------------------------------
// Recording CSV: header of 30 channel labels plus `eye_state`, one row per sample.

RawRecording read_recording_csv(const std::filesystem::path& path, std::string subject_id,
                                Group group, double sample_rate_hz);
void write_recording_csv(const RawRecording& recording, const std::filesystem::path& path);

}  // namespace eegcaps
