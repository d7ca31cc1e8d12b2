#include "eegcaps/error.hpp"
#include "eegcaps/signal.hpp"

namespace eegcaps {

BandPowerVector extract_features(const EpochPair& pair, double sample_rate_hz,
                                 const WelchParams& params) {
  if (pair.open_segment.rows() != kNumChannels || pair.closed_segment.rows() != kNumChannels) {
    fail(ErrorCode::InvalidRecording, "epoch pair must have 30 channels per segment");
  }
  BandPowerVector out;
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    for (EyeState state : {EyeState::Open, EyeState::Closed}) {
      const Matrix& seg = state == EyeState::Open ? pair.open_segment : pair.closed_segment;
      const Psd psd = welch_psd(seg.row(ch), sample_rate_hz, params);
      for (Band band : kAllBands) out.at(ch, band, state) = band_power(psd, band);
    }
  }
  return out;
}

}  // namespace eegcaps
