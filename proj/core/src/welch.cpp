#include <algorithm>
#include <cmath>
#include <numbers>

#include "eegcaps/error.hpp"
#include "eegcaps/signal.hpp"
#include "fft.hpp"

namespace eegcaps {

Psd welch_psd(std::span<const double> segment, double sample_rate_hz, const WelchParams& params) {
  const auto nperseg = static_cast<std::size_t>(std::llround(params.window_s * sample_rate_hz));
  if (!(params.overlap_fraction >= 0.0 && params.overlap_fraction < 1.0)) {
    fail(ErrorCode::InvalidArgument, "overlap fraction must lie in [0, 1)");
  }
  if (nperseg < 2 || segment.size() < nperseg) {
    fail(ErrorCode::SegmentTooShort, "segment shorter than one Welch window");
  }
  const auto noverlap =
      static_cast<std::size_t>(std::llround(params.overlap_fraction * static_cast<double>(nperseg)));
  const std::size_t step = std::max<std::size_t>(1, nperseg - noverlap);
  const std::size_t n_segments = (segment.size() - nperseg) / step + 1;

  // Periodic Hann.
  std::vector<double> window(nperseg);
  double window_energy = 0.0;
  for (std::size_t k = 0; k < nperseg; ++k) {
    window[k] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                     static_cast<double>(nperseg));
    window_energy += window[k] * window[k];
  }

  detail::RealFft fft(nperseg);
  const std::size_t n_bins = fft.spectrum_size();
  std::vector<std::complex<double>> spec(n_bins);
  std::vector<double> buf(nperseg);

  Psd psd;
  psd.resolution_hz = sample_rate_hz / static_cast<double>(nperseg);
  psd.frequencies.resize(n_bins);
  psd.density.assign(n_bins, 0.0);
  for (std::size_t k = 0; k < n_bins; ++k) {
    psd.frequencies[k] = static_cast<double>(k) * psd.resolution_hz;
  }

  for (std::size_t s = 0; s < n_segments; ++s) {
    const auto chunk = segment.subspan(s * step, nperseg);
    double mean = 0.0;
    for (double v : chunk) mean += v;
    mean /= static_cast<double>(nperseg);
    for (std::size_t k = 0; k < nperseg; ++k) buf[k] = (chunk[k] - mean) * window[k];
    fft.forward(buf, spec);
    for (std::size_t k = 0; k < n_bins; ++k) psd.density[k] += std::norm(spec[k]);
  }

  const double scale = 1.0 / (sample_rate_hz * window_energy * static_cast<double>(n_segments));
  const bool has_nyquist = nperseg % 2 == 0;
  for (std::size_t k = 0; k < n_bins; ++k) {
    const bool edge = k == 0 || (has_nyquist && k == n_bins - 1);
    psd.density[k] *= edge ? scale : 2.0 * scale;
  }
  return psd;
}

double integrate_psd(const Psd& psd, double low_hz, double high_hz) {
  if (psd.frequencies.empty() || low_hz < psd.frequencies.front() ||
      high_hz > psd.frequencies.back() + psd.resolution_hz) {
    fail(ErrorCode::BandOutsidePSD, "band exceeds the PSD frequency range");
  }
  // Bin frequencies are k*df; compare on the bin-index scale so that a bin at
  // exactly the band edge is classified without rounding noise.
  const double df = psd.resolution_hz;
  const double tol = 1e-9;
  double total = 0.0;
  for (std::size_t k = 0; k < psd.frequencies.size(); ++k) {
    const double idx = static_cast<double>(k);
    if (idx >= low_hz / df - tol && idx < high_hz / df - tol) total += psd.density[k];
  }
  return total * df;
}

double band_power(const Psd& psd, Band band) {
  const auto e = band_edges(band);
  return integrate_psd(psd, e.low_hz, e.high_hz);
}

}  // namespace eegcaps
