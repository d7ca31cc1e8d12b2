#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "eegcaps/capsnet/model.hpp"

namespace eegcaps::capsnet {

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  ModelParams<T> m;
  ModelParams<T> v;
  std::uint64_t step = 0;
};

template <typename T>
AdamState<T> make_adam_state(const ModelConfig& config);

template <typename T>
struct Example {
  const BasicTensor<T>* input;
  std::size_t label;
};

// One Adam update on the mean margin loss over the batch. Per-example gradients
// are accumulated in batch order. Returns the mean loss before the update.
template <typename T>
double train_step(std::span<const Example<T>> batch, ModelParams<T>& params,
                  AdamState<T>& state, const ModelConfig& config, const AdamHyper& hyper,
                  const MarginLossParams& loss = {});

struct TrainHyper {
  AdamHyper adam;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;  // parameter init and per-epoch shuffling
};

struct TrainLog {
  std::vector<double> epoch_loss;  // mean loss per epoch
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

// Trains a fresh model from init_params(config, seed) on the given examples.
// The example order is reshuffled every epoch from the seed.
template <typename T>
ModelParams<T> train_model(std::span<const BasicTensor<T>> inputs,
                           std::span<const std::size_t> labels, const ModelConfig& config,
                           const TrainHyper& hyper, TrainLog* log = nullptr,
                           const EpochCallback& on_epoch = {});

}  // namespace eegcaps::capsnet
