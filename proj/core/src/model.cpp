#include <cmath>
#include <random>

#include "eegcaps/capsnet/layers.hpp"
#include "eegcaps/capsnet/model.hpp"
#include "eegcaps/error.hpp"

namespace eegcaps::capsnet {

ModelConfig ModelConfig::gradient_check() {
  ModelConfig c;
  c.in_channels = 2;
  c.grid = 12;
  c.conv1_filters = 8;
  c.conv1_kernel = 3;
  c.pc_capsule_dim = 4;
  c.pc_filters_per_dim = 2;
  c.pc_kernel = 3;
  c.pc_stride = 2;
  c.dc_capsule_dim = 4;
  c.routing_iterations = 3;
  return c;
}

void validate_config(const ModelConfig& c) {
  const std::array<std::size_t, 12> fields = {
      c.in_channels,    c.grid,           c.conv1_filters,      c.conv1_kernel,
      c.conv1_stride,   c.pc_capsule_dim, c.pc_filters_per_dim, c.pc_kernel,
      c.pc_stride,      c.dc_num_classes, c.dc_capsule_dim,     c.routing_iterations};
  for (std::size_t f : fields) {
    if (f == 0) fail(ErrorCode::InvalidConfig, "model config fields must be positive");
  }
  if (c.grid < c.conv1_kernel || c.conv1_out() < c.pc_kernel) {
    fail(ErrorCode::InvalidConfig, "kernels do not fit the input grid");
  }
  if (c.dc_num_classes != 2) fail(ErrorCode::InvalidConfig, "only two-class heads are supported");
}

std::array<std::uint32_t, 12> config_fields(const ModelConfig& c) {
  auto u = [](std::size_t v) { return static_cast<std::uint32_t>(v); };
  return {u(c.in_channels),    u(c.grid),           u(c.conv1_filters),      u(c.conv1_kernel),
          u(c.conv1_stride),   u(c.pc_capsule_dim), u(c.pc_filters_per_dim), u(c.pc_kernel),
          u(c.pc_stride),      u(c.dc_num_classes), u(c.dc_capsule_dim),     u(c.routing_iterations)};
}

ModelConfig config_from_fields(const std::array<std::uint32_t, 12>& f) {
  ModelConfig c;
  c.in_channels = f[0];
  c.grid = f[1];
  c.conv1_filters = f[2];
  c.conv1_kernel = f[3];
  c.conv1_stride = f[4];
  c.pc_capsule_dim = f[5];
  c.pc_filters_per_dim = f[6];
  c.pc_kernel = f[7];
  c.pc_stride = f[8];
  c.dc_num_classes = f[9];
  c.dc_capsule_dim = f[10];
  c.routing_iterations = f[11];
  return c;
}

template <typename T>
ModelParams<T> zero_params(const ModelConfig& c) {
  validate_config(c);
  ModelParams<T> p;
  p.conv1_kernels = BasicTensor<T>({c.conv1_filters, c.in_channels, c.conv1_kernel, c.conv1_kernel});
  p.conv1_bias = BasicTensor<T>({c.conv1_filters});
  p.pc_kernels = BasicTensor<T>({c.pc_maps(), c.conv1_filters, c.pc_kernel, c.pc_kernel});
  p.pc_bias = BasicTensor<T>({c.pc_maps()});
  p.W = BasicTensor<T>(
      {c.num_primary_capsules(), c.dc_num_classes, c.dc_capsule_dim, c.pc_capsule_dim});
  return p;
}

template <typename T>
ModelParams<T> init_params(const ModelConfig& c, std::uint64_t seed) {
  ModelParams<T> p = zero_params<T>(c);
  std::mt19937_64 rng(seed);
  auto glorot = [&rng](BasicTensor<T>& k) {
    const double area = static_cast<double>(k.dim(2) * k.dim(3));
    const double fan_in = static_cast<double>(k.dim(1)) * area;
    const double fan_out = static_cast<double>(k.dim(0)) * area;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& v : k.values()) v = static_cast<T>(dist(rng));
  };
  glorot(p.conv1_kernels);
  glorot(p.pc_kernels);
  std::normal_distribution<double> normal(0.0, 0.05);
  for (auto& v : p.W.values()) v = static_cast<T>(normal(rng));
  return p;
}

template <typename T>
void check_params(const ModelParams<T>& params, const ModelConfig& config) {
  const auto expected = zero_params<T>(config);
  const auto want = expected.tensors();
  const auto have = params.tensors();
  for (std::size_t k = 0; k < want.size(); ++k) {
    require_shape(have[k]->shape(), want[k]->shape(), kParamNames[k]);
  }
}

template <typename T>
BasicTensor<T> image_tensor(const FeatureImage& image) {
  return BasicTensor<T>({image.channels, image.height, image.width},
                        std::vector<T>(image.data.begin(), image.data.end()));
}

template <typename T>
ForwardResult<T> forward(const BasicTensor<T>& input, const ModelParams<T>& params,
                         const ModelConfig& config) {
  require_shape(input.shape(), {config.in_channels, config.grid, config.grid}, "model input");
  ForwardResult<T> out;
  auto& cache = out.cache;
  cache.input = input;
  cache.conv1_out =
      conv2d_forward(input, params.conv1_kernels, params.conv1_bias, config.conv1_stride, true);
  const BasicTensor<T> pc_maps =
      conv2d_forward(cache.conv1_out, params.pc_kernels, params.pc_bias, config.pc_stride, false);

  // Capsule i = (g, y, x) takes its d-th component from map d*G + g.
  const std::size_t dims = config.pc_capsule_dim;
  const std::size_t groups = config.pc_filters_per_dim;
  const std::size_t side = config.pc_grid();
  const std::size_t area = side * side;
  const std::size_t n = config.num_primary_capsules();
  cache.pc_raw = BasicTensor<T>({n, dims});
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t pos = 0; pos < area; ++pos) {
      const std::size_t i = g * area + pos;
      for (std::size_t d = 0; d < dims; ++d) {
        cache.pc_raw[i * dims + d] = pc_maps[(d * groups + g) * area + pos];
      }
    }
  }
  cache.u = BasicTensor<T>({n, dims});
  for (std::size_t i = 0; i < n; ++i) {
    squash<T>(std::span<const T>(cache.pc_raw.data() + i * dims, dims),
              std::span<T>(cache.u.data() + i * dims, dims));
  }
  cache.u_hat = predict_vectors(cache.u, params.W);
  cache.routing = dynamic_routing(cache.u_hat, config.routing_iterations);

  const std::size_t classes = config.dc_num_classes;
  const std::size_t dout = config.dc_capsule_dim;
  out.class_lengths.resize(classes);
  for (std::size_t j = 0; j < classes; ++j) {
    T sq{0};
    for (std::size_t d = 0; d < dout; ++d) {
      const T x = cache.routing.v[j * dout + d];
      sq += x * x;
    }
    out.class_lengths[j] = std::sqrt(sq);
  }
  cache.lengths = out.class_lengths;
  return out;
}

template <typename T>
ForwardResult<T> forward(const FeatureImage& image, const ModelParams<T>& params,
                         const ModelConfig& config) {
  return forward(image_tensor<T>(image), params, config);
}

template <typename T>
T margin_loss(std::span<const T> lengths, std::size_t label, const MarginLossParams& p) {
  T loss{0};
  for (std::size_t k = 0; k < lengths.size(); ++k) {
    if (k == label) {
      const T h = std::max(T{0}, static_cast<T>(p.m_plus) - lengths[k]);
      loss += h * h;
    } else {
      const T h = std::max(T{0}, lengths[k] - static_cast<T>(p.m_minus));
      loss += static_cast<T>(p.lambda) * h * h;
    }
  }
  return loss;
}

template <typename T>
std::vector<T> margin_loss_grad(std::span<const T> lengths, std::size_t label,
                                const MarginLossParams& p) {
  std::vector<T> g(lengths.size());
  for (std::size_t k = 0; k < lengths.size(); ++k) {
    if (k == label) {
      g[k] = T{-2} * std::max(T{0}, static_cast<T>(p.m_plus) - lengths[k]);
    } else {
      g[k] = T{2} * static_cast<T>(p.lambda) * std::max(T{0}, lengths[k] - static_cast<T>(p.m_minus));
    }
  }
  return g;
}

template <typename T>
void backward(const ForwardCache<T>& cache, std::size_t label, const ModelParams<T>& params,
              const ModelConfig& config, ModelParams<T>& grads, const MarginLossParams& loss) {
  const std::size_t classes = config.dc_num_classes;
  const std::size_t dout = config.dc_capsule_dim;
  const std::size_t dims = config.pc_capsule_dim;
  const std::size_t groups = config.pc_filters_per_dim;
  const std::size_t side = config.pc_grid();
  const std::size_t area = side * side;
  const std::size_t n = config.num_primary_capsules();

  // Loss -> v through |v_j|.
  const auto dlen = margin_loss_grad<T>(cache.lengths, label, loss);
  BasicTensor<T> grad_v({classes, dout});
  for (std::size_t j = 0; j < classes; ++j) {
    const T len = cache.lengths[j];
    if (len == T{0}) continue;
    for (std::size_t d = 0; d < dout; ++d) {
      grad_v[j * dout + d] = dlen[j] * cache.routing.v[j * dout + d] / len;
    }
  }

  const BasicTensor<T> grad_u_hat =
      dynamic_routing_backward(cache.u_hat, cache.routing.trace, grad_v);

  BasicTensor<T> grad_u(cache.u.shape());
  predict_vectors_backward(cache.u, params.W, grad_u_hat, grads.W, grad_u);

  BasicTensor<T> grad_pc_maps({config.pc_maps(), side, side});
  std::vector<T> grad_raw(dims);
  for (std::size_t i = 0; i < n; ++i) {
    squash_backward<T>(std::span<const T>(cache.pc_raw.data() + i * dims, dims),
                       std::span<const T>(grad_u.data() + i * dims, dims), grad_raw);
    const std::size_t g = i / area;
    const std::size_t pos = i % area;
    for (std::size_t d = 0; d < dims; ++d) grad_pc_maps[(d * groups + g) * area + pos] = grad_raw[d];
  }

  BasicTensor<T> grad_conv1(cache.conv1_out.shape());
  conv2d_backward(cache.conv1_out, params.pc_kernels, config.pc_stride, false, BasicTensor<T>{},
                  grad_pc_maps, grads.pc_kernels, grads.pc_bias, &grad_conv1);
  conv2d_backward(cache.input, params.conv1_kernels, config.conv1_stride, true, cache.conv1_out,
                  grad_conv1, grads.conv1_kernels, grads.conv1_bias,
                  static_cast<BasicTensor<T>*>(nullptr));
}

template <typename T>
ModelParams<T> backward(const ForwardCache<T>& cache, std::size_t label,
                        const ModelParams<T>& params, const ModelConfig& config,
                        const MarginLossParams& loss) {
  ModelParams<T> grads = zero_params<T>(config);
  backward(cache, label, params, config, grads, loss);
  return grads;
}

template <typename T>
std::size_t predict_from_lengths(std::span<const T> lengths) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < lengths.size(); ++k) {
    if (lengths[k] > lengths[best]) best = k;
  }
  return best;
}

template <typename T>
std::size_t predict(const FeatureImage& image, const ModelParams<T>& params,
                    const ModelConfig& config) {
  const auto result = forward(image, params, config);
  return predict_from_lengths<T>(result.class_lengths);
}

#define EEGCAPS_INSTANTIATE_MODEL(T)                                                          \
  template ModelParams<T> zero_params<T>(const ModelConfig&);                                 \
  template ModelParams<T> init_params<T>(const ModelConfig&, std::uint64_t);                  \
  template void check_params(const ModelParams<T>&, const ModelConfig&);                      \
  template BasicTensor<T> image_tensor<T>(const FeatureImage&);                               \
  template ForwardResult<T> forward(const BasicTensor<T>&, const ModelParams<T>&,             \
                                    const ModelConfig&);                                      \
  template ForwardResult<T> forward(const FeatureImage&, const ModelParams<T>&,               \
                                    const ModelConfig&);                                      \
  template T margin_loss(std::span<const T>, std::size_t, const MarginLossParams&);           \
  template std::vector<T> margin_loss_grad(std::span<const T>, std::size_t,                   \
                                           const MarginLossParams&);                          \
  template void backward(const ForwardCache<T>&, std::size_t, const ModelParams<T>&,          \
                         const ModelConfig&, ModelParams<T>&, const MarginLossParams&);       \
  template ModelParams<T> backward(const ForwardCache<T>&, std::size_t, const ModelParams<T>&, \
                                   const ModelConfig&, const MarginLossParams&);              \
  template std::size_t predict_from_lengths(std::span<const T>);                              \
  template std::size_t predict(const FeatureImage&, const ModelParams<T>&, const ModelConfig&);

EEGCAPS_INSTANTIATE_MODEL(float)
EEGCAPS_INSTANTIATE_MODEL(double)

}  // namespace eegcaps::capsnet
