#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace eegcaps {

inline constexpr std::size_t kNumChannels = 30;
inline constexpr std::size_t kNumBands = 4;
inline constexpr std::size_t kNumEyeStates = 2;
inline constexpr double kEpochSeconds = 5.0;

// Label values match the on-disk encoding (0 = HC, 1 = PD).
enum class Group : unsigned { HC = 0, PD = 1 };
enum class EyeState : unsigned char { Open = 0, Closed = 1 };
enum class Band : unsigned { Theta = 0, Alpha = 1, Beta = 2, Gamma = 3 };

inline constexpr std::array<Band, kNumBands> kAllBands = {Band::Theta, Band::Alpha, Band::Beta,
                                                         Band::Gamma};

struct BandEdges {
  double low_hz;
  double high_hz;  // exclusive
};

constexpr BandEdges band_edges(Band band) {
  switch (band) {
    case Band::Theta: return {4.0, 8.0};
    case Band::Alpha: return {8.0, 13.0};
    case Band::Beta: return {13.0, 30.0};
    case Band::Gamma: return {30.0, 45.0};
  }
  return {0.0, 0.0};
}

std::string_view to_string(Group group);
std::string_view to_string(Band band);
Group parse_group(std::string_view text);
Band parse_band(std::string_view text);
// Comma-separated band list such as "theta,gamma"; result is in canonical band order.
std::vector<Band> parse_band_list(std::string_view text);

inline constexpr unsigned label_of(Group g) { return static_cast<unsigned>(g); }

// Dense row-major matrix of doubles. Rows are channels for signal data.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace eegcaps
