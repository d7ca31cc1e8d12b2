#include <cmath>
#include <sstream>

#include "eegcaps/capsnet/tensor.hpp"
#include "eegcaps/error.hpp"

namespace eegcaps::capsnet {

namespace {
std::string shape_text(const Shape& s) {
  std::ostringstream ss;
  ss << '(';
  for (std::size_t i = 0; i < s.size(); ++i) ss << (i ? "," : "") << s[i];
  ss << ')';
  return ss.str();
}
}  // namespace

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    fail(ErrorCode::ShapeMismatch, "tensor data length does not match shape " + shape_text(shape_));
  }
}

template class BasicTensor<float>;
template class BasicTensor<double>;

void require_shape(const Shape& actual, const Shape& expected, const char* what) {
  if (actual != expected) {
    fail(ErrorCode::ShapeMismatch, std::string(what) + ": expected shape " + shape_text(expected) +
                                       ", got " + shape_text(actual));
  }
}

bool all_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool all_finite(std::span<const float> values) {
  for (float v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace eegcaps::capsnet
