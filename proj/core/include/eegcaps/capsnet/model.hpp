#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>

#include "eegcaps/capsnet/routing.hpp"
#include "eegcaps/capsnet/tensor.hpp"
#include "eegcaps/topomap.hpp"

namespace eegcaps::capsnet {

struct ModelConfig {
  std::size_t in_channels = 8;
  std::size_t grid = 32;
  std::size_t conv1_filters = 256;
  std::size_t conv1_kernel = 9;
  std::size_t conv1_stride = 1;
  std::size_t pc_capsule_dim = 8;
  std::size_t pc_filters_per_dim = 32;
  std::size_t pc_kernel = 9;
  std::size_t pc_stride = 2;
  std::size_t dc_num_classes = 2;
  std::size_t dc_capsule_dim = 16;
  std::size_t routing_iterations = 3;

  std::size_t conv1_out() const { return (grid - conv1_kernel) / conv1_stride + 1; }
  std::size_t pc_grid() const { return (conv1_out() - pc_kernel) / pc_stride + 1; }
  std::size_t pc_maps() const { return pc_capsule_dim * pc_filters_per_dim; }
  std::size_t num_primary_capsules() const {
    return pc_grid() * pc_grid() * pc_filters_per_dim;
  }

  // Small geometry used for finite-difference checks: 2x12x12 input, 8 conv
  // filters (3x3), 4-dim x 2-group primary capsules (3x3, stride 2), 4-dim
  // digit capsules.
  static ModelConfig gradient_check();

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Throws InvalidConfig for zero sizes or kernels that do not fit.
void validate_config(const ModelConfig& config);

// The 12 config integers in declaration order (checkpoint config block).
std::array<std::uint32_t, 12> config_fields(const ModelConfig& config);
ModelConfig config_from_fields(const std::array<std::uint32_t, 12>& fields);

template <typename T>
struct ModelParams {
  BasicTensor<T> conv1_kernels;  // [F1 x C x k1 x k1]
  BasicTensor<T> conv1_bias;     // [F1]
  BasicTensor<T> pc_kernels;     // [(D*G) x F1 x kp x kp], map m = d*G + g
  BasicTensor<T> pc_bias;        // [D*G]
  BasicTensor<T> W;              // [N x J x Dout x Din]

  static constexpr std::size_t kNumTensors = 5;

  std::array<BasicTensor<T>*, kNumTensors> tensors() {
    return {&conv1_kernels, &conv1_bias, &pc_kernels, &pc_bias, &W};
  }
  std::array<const BasicTensor<T>*, kNumTensors> tensors() const {
    return {&conv1_kernels, &conv1_bias, &pc_kernels, &pc_bias, &W};
  }

  template <typename U>
  ModelParams<U> cast() const {
    return {conv1_kernels.template cast<U>(), conv1_bias.template cast<U>(),
            pc_kernels.template cast<U>(), pc_bias.template cast<U>(), W.template cast<U>()};
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

inline constexpr std::array<const char*, 5> kParamNames = {"conv1_kernels", "conv1_bias",
                                                           "pc_kernels", "pc_bias", "W"};

template <typename T>
ModelParams<T> zero_params(const ModelConfig& config);

// Conv kernels ~ U(+-sqrt(6 / (fan_in + fan_out))), W ~ N(0, 0.05), biases 0.
// Values are drawn in double, so float and double models from one seed agree.
template <typename T>
ModelParams<T> init_params(const ModelConfig& config, std::uint64_t seed);

template <typename T>
void check_params(const ModelParams<T>& params, const ModelConfig& config);

template <typename T>
struct ForwardCache {
  BasicTensor<T> input;         // [C x G x G]
  BasicTensor<T> conv1_out;     // [F1 x H1 x H1], post-ReLU
  BasicTensor<T> pc_raw;        // [N x Din] before squash
  BasicTensor<T> u;             // [N x Din]
  BasicTensor<T> u_hat;         // [N x J x Dout]
  RoutingResult<T> routing;
  std::vector<T> lengths;       // [J]
};

template <typename T>
struct ForwardResult {
  std::vector<T> class_lengths;
  ForwardCache<T> cache;
};

template <typename T>
BasicTensor<T> image_tensor(const FeatureImage& image);

template <typename T>
ForwardResult<T> forward(const BasicTensor<T>& input, const ModelParams<T>& params,
                         const ModelConfig& config);
template <typename T>
ForwardResult<T> forward(const FeatureImage& image, const ModelParams<T>& params,
                         const ModelConfig& config);

struct MarginLossParams {
  double m_plus = 0.9;
  double m_minus = 0.1;
  double lambda = 0.5;
};

template <typename T>
T margin_loss(std::span<const T> class_lengths, std::size_t label,
              const MarginLossParams& p = {});

// dL / d|v_k| for each class.
template <typename T>
std::vector<T> margin_loss_grad(std::span<const T> class_lengths, std::size_t label,
                                const MarginLossParams& p = {});

// Adds the gradient of margin_loss for this example into `grads`.
template <typename T>
void backward(const ForwardCache<T>& cache, std::size_t label, const ModelParams<T>& params,
              const ModelConfig& config, ModelParams<T>& grads,
              const MarginLossParams& loss = {});

template <typename T>
ModelParams<T> backward(const ForwardCache<T>& cache, std::size_t label,
                        const ModelParams<T>& params, const ModelConfig& config,
                        const MarginLossParams& loss = {});

// argmax of the class lengths; ties resolve to class 0.
template <typename T>
std::size_t predict_from_lengths(std::span<const T> class_lengths);

template <typename T>
std::size_t predict(const FeatureImage& image, const ModelParams<T>& params,
                    const ModelConfig& config);

}  // namespace eegcaps::capsnet
