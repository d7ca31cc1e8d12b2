#pragma once

#include <complex>
#include <cstddef>
#include <span>

#include <fftw3.h>

namespace eegcaps::detail {

// Owns an r2c/c2r plan pair for one transform length. Planning goes through a
// process-wide mutex because the FFTW planner is not reentrant; execution is.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept { return n_; }
  std::size_t spectrum_size() const noexcept { return n_ / 2 + 1; }

  // Input is zero-padded to size(). Output holds spectrum_size() bins.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  // Unnormalized inverse: out = n * ifft(in).
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  std::size_t n_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan forward_plan_ = nullptr;
  fftw_plan inverse_plan_ = nullptr;
};

}  // namespace eegcaps::detail
