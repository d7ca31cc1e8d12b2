#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "eegcaps/capsnet/train.hpp"
#include "eegcaps/error.hpp"

namespace eegcaps::capsnet {

template <typename T>
AdamState<T> make_adam_state(const ModelConfig& config) {
  return {zero_params<T>(config), zero_params<T>(config), 0};
}

template <typename T>
double train_step(std::span<const Example<T>> batch, ModelParams<T>& params,
                  AdamState<T>& state, const ModelConfig& config, const AdamHyper& hyper,
                  const MarginLossParams& loss) {
  if (batch.empty()) fail(ErrorCode::EmptyBatch, "train_step needs at least one example");

  ModelParams<T> grads = zero_params<T>(config);
  double total_loss = 0.0;
  for (const auto& ex : batch) {
    const auto fwd = forward(*ex.input, params, config);
    total_loss += static_cast<double>(margin_loss<T>(fwd.class_lengths, ex.label, loss));
    backward(fwd.cache, ex.label, params, config, grads, loss);
  }
  const T inv_batch = T{1} / static_cast<T>(batch.size());

  ++state.step;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(hyper.beta1);
  const T b2 = static_cast<T>(hyper.beta2);
  const T correction1 = static_cast<T>(1.0 - std::pow(hyper.beta1, t));
  const T correction2 = static_cast<T>(1.0 - std::pow(hyper.beta2, t));
  const T lr = static_cast<T>(hyper.learning_rate);
  const T eps = static_cast<T>(hyper.epsilon);

  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  for (std::size_t k = 0; k < p.size(); ++k) {
    T* pk = p[k]->data();
    const T* gk = g[k]->data();
    T* mk = m[k]->data();
    T* vk = v[k]->data();
    for (std::size_t i = 0; i < p[k]->size(); ++i) {
      const T grad = gk[i] * inv_batch;
      mk[i] = b1 * mk[i] + (T{1} - b1) * grad;
      vk[i] = b2 * vk[i] + (T{1} - b2) * grad * grad;
      const T m_hat = mk[i] / correction1;
      const T v_hat = vk[i] / correction2;
      pk[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
  return total_loss / static_cast<double>(batch.size());
}

template <typename T>
ModelParams<T> train_model(std::span<const BasicTensor<T>> inputs,
                           std::span<const std::size_t> labels, const ModelConfig& config,
                           const TrainHyper& hyper, TrainLog* log, const EpochCallback& on_epoch) {
  if (inputs.size() != labels.size()) {
    fail(ErrorCode::ShapeMismatch, "one label per training input required");
  }
  if (inputs.empty()) fail(ErrorCode::EmptyBatch, "no training examples");
  if (hyper.batch_size == 0) fail(ErrorCode::InvalidArgument, "batch size must be positive");

  ModelParams<T> params = init_params<T>(config, hyper.seed);
  AdamState<T> state = make_adam_state<T>(config);
  std::mt19937_64 rng(hyper.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Example<T>> batch;
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    // Fisher-Yates with the raw engine output keeps the permutation independent
    // of the standard library's distribution implementation.
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      batch.clear();
      const std::size_t end = std::min(order.size(), start + hyper.batch_size);
      for (std::size_t k = start; k < end; ++k) batch.push_back({&inputs[order[k]], labels[order[k]]});
      epoch_loss += train_step<T>(batch, params, state, config, hyper.adam);
      ++batches;
    }
    epoch_loss /= static_cast<double>(batches);
    if (log != nullptr) log->epoch_loss.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  return params;
}

#define EEGCAPS_INSTANTIATE_TRAIN(T)                                                        \
  template AdamState<T> make_adam_state<T>(const ModelConfig&);                             \
  template double train_step<T>(std::span<const Example<T>>, ModelParams<T>&, AdamState<T>&, \
                                const ModelConfig&, const AdamHyper&, const MarginLossParams&); \
  template ModelParams<T> train_model<T>(std::span<const BasicTensor<T>>,                   \
                                         std::span<const std::size_t>, const ModelConfig&,  \
                                         const TrainHyper&, TrainLog*, const EpochCallback&);

EEGCAPS_INSTANTIATE_TRAIN(float)
EEGCAPS_INSTANTIATE_TRAIN(double)

}  // namespace eegcaps::capsnet
