#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "eegcaps/capsnet/layers.hpp"
#include "eegcaps/error.hpp"

namespace eegcaps::capsnet {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

struct ConvGeometry {
  std::size_t channels, height, width, filters, kernel, stride, out_h, out_w;

  std::size_t patch() const { return channels * kernel * kernel; }
  std::size_t positions() const { return out_h * out_w; }
};

template <typename T>
ConvGeometry geometry(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                      std::size_t stride) {
  if (input.rank() != 3 || kernels.rank() != 4) {
    fail(ErrorCode::ShapeMismatch, "conv2d expects a rank-3 input and rank-4 kernels");
  }
  ConvGeometry g{};
  g.channels = input.dim(0);
  g.height = input.dim(1);
  g.width = input.dim(2);
  g.filters = kernels.dim(0);
  g.kernel = kernels.dim(2);
  g.stride = stride;
  if (kernels.dim(1) != g.channels || kernels.dim(3) != g.kernel) {
    fail(ErrorCode::ShapeMismatch, "kernel shape does not match input channels");
  }
  if (stride == 0 || g.height < g.kernel || g.width < g.kernel) {
    fail(ErrorCode::ShapeMismatch, "input smaller than kernel");
  }
  g.out_h = (g.height - g.kernel) / stride + 1;
  g.out_w = (g.width - g.kernel) / stride + 1;
  return g;
}

// [C*k*k x H'*W'] patch matrix.
template <typename T>
RowMat<T> im2col(const BasicTensor<T>& input, const ConvGeometry& g) {
  RowMat<T> cols(g.patch(), g.positions());
  const T* x = input.data();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        T* dst = cols.data() + ((c * g.kernel + ky) * g.kernel + kx) * g.positions();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const T* src = x + (c * g.height + oy * g.stride + ky) * g.width + kx;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) dst[oy * g.out_w + ox] = src[ox * g.stride];
        }
      }
    }
  }
  return cols;
}

template <typename T>
void col2im_add(const RowMat<T>& cols, const ConvGeometry& g, BasicTensor<T>& grad_input) {
  T* dx = grad_input.data();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        const T* src = cols.data() + ((c * g.kernel + ky) * g.kernel + kx) * g.positions();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          T* dst = dx + (c * g.height + oy * g.stride + ky) * g.width + kx;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) dst[ox * g.stride] += src[oy * g.out_w + ox];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                              const BasicTensor<T>& bias, std::size_t stride, bool relu) {
  const auto g = geometry(input, kernels, stride);
  require_shape(bias.shape(), {g.filters}, "conv2d bias");
  const RowMat<T> cols = im2col(input, g);

  BasicTensor<T> out({g.filters, g.out_h, g.out_w});
  ConstMapMat<T> K(kernels.data(), static_cast<Eigen::Index>(g.filters),
                   static_cast<Eigen::Index>(g.patch()));
  MapMat<T> Y(out.data(), static_cast<Eigen::Index>(g.filters),
              static_cast<Eigen::Index>(g.positions()));
  Y.noalias() = K * cols;
  for (std::size_t f = 0; f < g.filters; ++f) {
    T* row = out.data() + f * g.positions();
    for (std::size_t p = 0; p < g.positions(); ++p) {
      const T v = row[p] + bias[f];
      row[p] = (relu && v < T{0}) ? T{0} : v;
    }
  }
  return out;
}

template <typename T>
void conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                     std::size_t stride, bool relu, const BasicTensor<T>& output,
                     const BasicTensor<T>& grad_output, BasicTensor<T>& grad_kernels,
                     BasicTensor<T>& grad_bias, BasicTensor<T>* grad_input) {
  const auto g = geometry(input, kernels, stride);
  require_shape(grad_output.shape(), {g.filters, g.out_h, g.out_w}, "conv2d grad_output");
  require_shape(grad_kernels.shape(), kernels.shape(), "conv2d grad_kernels");
  require_shape(grad_bias.shape(), {g.filters}, "conv2d grad_bias");

  RowMat<T> dy(g.filters, g.positions());
  std::copy_n(grad_output.data(), grad_output.size(), dy.data());
  if (relu) {
    const T* y = output.data();
    T* d = dy.data();
    for (std::size_t k = 0; k < grad_output.size(); ++k) {
      if (!(y[k] > T{0})) d[k] = T{0};
    }
  }
  for (std::size_t f = 0; f < g.filters; ++f) grad_bias[f] += dy.row(static_cast<Eigen::Index>(f)).sum();

  const RowMat<T> cols = im2col(input, g);
  MapMat<T> dK(grad_kernels.data(), static_cast<Eigen::Index>(g.filters),
               static_cast<Eigen::Index>(g.patch()));
  dK.noalias() += dy * cols.transpose();

  if (grad_input != nullptr) {
    require_shape(grad_input->shape(), input.shape(), "conv2d grad_input");
    ConstMapMat<T> K(kernels.data(), static_cast<Eigen::Index>(g.filters),
                     static_cast<Eigen::Index>(g.patch()));
    RowMat<T> dcols(g.patch(), g.positions());
    dcols.noalias() = K.transpose() * dy;
    col2im_add(dcols, g, *grad_input);
  }
}

namespace {
template <typename T>
T scaled_norm(std::span<const T> s) {
  T m{0};
  for (T x : s) m = std::max(m, std::abs(x));
  T acc{0};
  for (T x : s) acc += (x / m) * (x / m);
  return m * std::sqrt(acc);
}
}  // namespace

template <typename T>
void squash(std::span<const T> s, std::span<T> v) {
  T sq{0};
  for (T x : s) sq += x * x;
  if (!std::isfinite(sq)) {
    // |s|^2 overflowed: v is s / |s| to working precision.
    const T n = scaled_norm(s);
    for (std::size_t k = 0; k < s.size(); ++k) v[k] = s[k] / n;
    return;
  }
  const T n = std::sqrt(sq);
  // |s| / (1 + |s|^2) * s, which is the bounded form without dividing by |s|.
  const T scale = n / (T{1} + sq);
  for (std::size_t k = 0; k < s.size(); ++k) v[k] = scale * s[k];
}

template <typename T>
void squash_backward(std::span<const T> s, std::span<const T> grad_v, std::span<T> grad_s) {
  T sq{0};
  T dot{0};
  for (std::size_t k = 0; k < s.size(); ++k) {
    sq += s[k] * s[k];
    dot += s[k] * grad_v[k];
  }
  if (!std::isfinite(sq) || !std::isfinite(dot)) {
    // Large |s|: with t = 1/|s| and e = s/|s|, grad = t/(1+t^2) g + (t^3 - t)/(1+t^2)^2 (e.g) e.
    const T n = scaled_norm(s);
    const T t = T{1} / n;
    T edot{0};
    for (std::size_t k = 0; k < s.size(); ++k) edot += (s[k] / n) * grad_v[k];
    const T d = T{1} + t * t;
    const T radial = (t * t * t - t) / (d * d);
    for (std::size_t k = 0; k < s.size(); ++k) {
      grad_s[k] = t / d * grad_v[k] + radial * edot * (s[k] / n);
    }
    return;
  }
  const T n = std::sqrt(sq);
  if (n == T{0}) {
    for (auto& g : grad_s) g = T{0};
    return;
  }
  // v = g(n) s with g(n) = n / (1 + n^2); dv = g ds + s g'(n) (s . ds) / n.
  const T denom = T{1} + sq;
  const T gain = n / denom;
  const T radial = (T{1} - sq) / (n * denom * denom);
  for (std::size_t k = 0; k < s.size(); ++k) grad_s[k] = gain * grad_v[k] + radial * dot * s[k];
}

template <typename T>
BasicTensor<T> predict_vectors(const BasicTensor<T>& u, const BasicTensor<T>& W) {
  if (u.rank() != 2 || W.rank() != 4) {
    fail(ErrorCode::ShapeMismatch, "predict_vectors expects u [N x Din] and W [N x J x Dout x Din]");
  }
  const std::size_t n = u.dim(0), din = u.dim(1), classes = W.dim(1), dout = W.dim(2);
  require_shape(W.shape(), {n, classes, dout, din}, "transformation matrices");
  BasicTensor<T> u_hat({n, classes, dout});
  for (std::size_t i = 0; i < n; ++i) {
    const T* ui = u.data() + i * din;
    for (std::size_t j = 0; j < classes; ++j) {
      const T* w = W.data() + (i * classes + j) * dout * din;
      T* out = u_hat.data() + (i * classes + j) * dout;
      for (std::size_t r = 0; r < dout; ++r) {
        T acc{0};
        for (std::size_t c = 0; c < din; ++c) acc += w[r * din + c] * ui[c];
        out[r] = acc;
      }
    }
  }
  return u_hat;
}

template <typename T>
void predict_vectors_backward(const BasicTensor<T>& u, const BasicTensor<T>& W,
                              const BasicTensor<T>& grad_u_hat, BasicTensor<T>& grad_W,
                              BasicTensor<T>& grad_u) {
  const std::size_t n = u.dim(0), din = u.dim(1), classes = W.dim(1), dout = W.dim(2);
  require_shape(grad_u_hat.shape(), {n, classes, dout}, "grad u_hat");
  require_shape(grad_W.shape(), W.shape(), "grad W");
  require_shape(grad_u.shape(), u.shape(), "grad u");
  for (std::size_t i = 0; i < n; ++i) {
    const T* ui = u.data() + i * din;
    T* gui = grad_u.data() + i * din;
    for (std::size_t j = 0; j < classes; ++j) {
      const T* w = W.data() + (i * classes + j) * dout * din;
      T* gw = grad_W.data() + (i * classes + j) * dout * din;
      const T* g = grad_u_hat.data() + (i * classes + j) * dout;
      for (std::size_t r = 0; r < dout; ++r) {
        for (std::size_t c = 0; c < din; ++c) {
          gw[r * din + c] += g[r] * ui[c];
          gui[c] += w[r * din + c] * g[r];
        }
      }
    }
  }
}

template <typename T>
BasicTensor<T> routing_softmax(const BasicTensor<T>& b) {
  if (b.rank() != 2) fail(ErrorCode::ShapeMismatch, "routing_softmax expects [N x J]");
  const std::size_t n = b.dim(0), classes = b.dim(1);
  BasicTensor<T> c(b.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = b.data() + i * classes;
    T* out = c.data() + i * classes;
    T mx = row[0];
    for (std::size_t j = 1; j < classes; ++j) mx = std::max(mx, row[j]);
    T sum{0};
    for (std::size_t j = 0; j < classes; ++j) {
      out[j] = std::exp(row[j] - mx);
      sum += out[j];
    }
    for (std::size_t j = 0; j < classes; ++j) out[j] /= sum;
  }
  return c;
}

#define EEGCAPS_INSTANTIATE_LAYERS(T)                                                           \
  template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                         const BasicTensor<T>&, std::size_t, bool);             \
  template void conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&, std::size_t,      \
                                bool, const BasicTensor<T>&, const BasicTensor<T>&,             \
                                BasicTensor<T>&, BasicTensor<T>&, BasicTensor<T>*);             \
  template void squash(std::span<const T>, std::span<T>);                                       \
  template void squash_backward(std::span<const T>, std::span<const T>, std::span<T>);          \
  template BasicTensor<T> predict_vectors(const BasicTensor<T>&, const BasicTensor<T>&);        \
  template void predict_vectors_backward(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                         const BasicTensor<T>&, BasicTensor<T>&,                \
                                         BasicTensor<T>&);                                      \
  template BasicTensor<T> routing_softmax(const BasicTensor<T>&);

EEGCAPS_INSTANTIATE_LAYERS(float)
EEGCAPS_INSTANTIATE_LAYERS(double)

}  // namespace eegcaps::capsnet
