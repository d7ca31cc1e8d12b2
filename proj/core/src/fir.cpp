#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>

#include "eegcaps/error.hpp"
#include "eegcaps/signal.hpp"
#include "fft.hpp"

namespace eegcaps {
namespace detail {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  std::lock_guard lock(planner_mutex());
  real_ = fftw_alloc_real(n_);
  spec_ = fftw_alloc_complex(n_ / 2 + 1);
  forward_plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), real_, spec_, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(n_), spec_, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(forward_plan_);
  fftw_destroy_plan(inverse_plan_);
  fftw_free(real_);
  fftw_free(spec_);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  const std::size_t m = std::min(in.size(), n_);
  std::copy_n(in.begin(), m, real_);
  std::fill(real_ + m, real_ + n_, 0.0);
  fftw_execute(forward_plan_);
  std::memcpy(static_cast<void*>(out.data()), spec_, sizeof(fftw_complex) * spectrum_size());
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  std::memcpy(spec_, in.data(), sizeof(fftw_complex) * spectrum_size());
  fftw_execute(inverse_plan_);
  std::copy_n(real_, std::min(out.size(), n_), out.begin());
}

}  // namespace detail

namespace {

// Unit-DC-gain Hamming-windowed sinc low-pass, computed for the first half and
// mirrored so the kernel is exactly symmetric.
std::vector<double> windowed_sinc_lowpass(double cutoff_hz, double fs, std::size_t n_taps) {
  const std::size_t mid = (n_taps - 1) / 2;
  const double fc = cutoff_hz / fs;
  std::vector<double> h(n_taps);
  for (std::size_t k = 0; k <= mid; ++k) {
    const double m = static_cast<double>(k) - static_cast<double>(mid);
    const double sinc = (m == 0.0) ? 2.0 * fc
                                   : std::sin(2.0 * std::numbers::pi * fc * m) /
                                         (std::numbers::pi * m);
    const double window =
        0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                   static_cast<double>(n_taps - 1));
    h[k] = sinc * window;
    h[n_taps - 1 - k] = h[k];
  }
  // Pairwise summation from the outside in keeps the sum symmetric as well.
  double sum = h[mid];
  for (std::size_t k = 0; k < mid; ++k) sum += h[k] + h[n_taps - 1 - k];
  for (double& v : h) v /= sum;
  return h;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

std::size_t default_fir_taps(double sample_rate_hz) {
  return 2 * static_cast<std::size_t>(std::llround(sample_rate_hz)) + 1;
}

FirFilter design_bandpass_fir(double low_cut_hz, double high_cut_hz, double sample_rate_hz,
                              std::size_t n_taps) {
  if (!(low_cut_hz > 0.0 && low_cut_hz < high_cut_hz && high_cut_hz < sample_rate_hz / 2.0)) {
    fail(ErrorCode::InvalidBandEdges, "require 0 < low < high < fs/2");
  }
  if (n_taps % 2 == 0) fail(ErrorCode::EvenTaps, "tap count must be odd");
  if (n_taps < 3) fail(ErrorCode::EvenTaps, "tap count must be at least 3");

  const auto high = windowed_sinc_lowpass(high_cut_hz, sample_rate_hz, n_taps);
  const auto low = windowed_sinc_lowpass(low_cut_hz, sample_rate_hz, n_taps);
  FirFilter f;
  f.low_cut_hz = low_cut_hz;
  f.high_cut_hz = high_cut_hz;
  f.sample_rate_hz = sample_rate_hz;
  f.coefficients.resize(n_taps);
  for (std::size_t k = 0; k < n_taps; ++k) f.coefficients[k] = high[k] - low[k];
  return f;
}

std::complex<double> frequency_response(const FirFilter& filter, double freq_hz) {
  std::complex<double> acc{0.0, 0.0};
  const double w = -2.0 * std::numbers::pi * freq_hz / filter.sample_rate_hz;
  for (std::size_t k = 0; k < filter.coefficients.size(); ++k) {
    acc += filter.coefficients[k] * std::polar(1.0, w * static_cast<double>(k));
  }
  return acc;
}

std::vector<double> filtfilt(std::span<const double> x, std::span<const double> taps) {
  const std::size_t n = x.size();
  const std::size_t n_taps = taps.size();
  const std::size_t mid = (n_taps - 1) / 2;
  const std::size_t pad = std::min(n_taps, n - 1);

  // Odd reflection about both end points.
  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) ext[i] = 2.0 * x[0] - x[pad - i];
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));
  for (std::size_t i = 0; i < pad; ++i) ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

  const std::size_t len = ext.size();
  detail::RealFft fft(next_pow2(len + n_taps - 1));
  std::vector<std::complex<double>> kernel(fft.spectrum_size());
  std::vector<std::complex<double>> spec(fft.spectrum_size());
  std::vector<double> full(fft.size());
  fft.forward(taps, kernel);
  const double scale = 1.0 / static_cast<double>(fft.size());

  // Centered convolution with the kernel; y[i] = sum_k h[k] x[i + mid - k].
  auto centered = [&](std::vector<double>& signal) {
    fft.forward(signal, spec);
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= kernel[k];
    fft.inverse(spec, full);
    for (std::size_t i = 0; i < len; ++i) signal[i] = full[i + mid] * scale;
  };

  centered(ext);
  std::reverse(ext.begin(), ext.end());
  centered(ext);
  std::reverse(ext.begin(), ext.end());

  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

RawRecording apply_fir(const RawRecording& recording, const FirFilter& filter) {
  if (recording.num_samples() <= filter.num_taps()) {
    fail(ErrorCode::RecordingTooShort, "recording must be longer than the filter");
  }
  RawRecording out = recording;
  for (std::size_t ch = 0; ch < recording.num_channels(); ++ch) {
    const auto y = filtfilt(recording.samples.row(ch), filter.coefficients);
    std::copy(y.begin(), y.end(), out.samples.row(ch).begin());
  }
  return out;
}

}  // namespace eegcaps
