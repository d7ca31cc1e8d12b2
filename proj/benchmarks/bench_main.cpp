#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "eegcaps/capsnet/model.hpp"
#include "eegcaps/capsnet/routing.hpp"
#include "eegcaps/signal.hpp"
#include "eegcaps/topomap.hpp"

using namespace eegcaps;
using namespace eegcaps::capsnet;

namespace {

template <typename T>
BasicTensor<T> random_input(const ModelConfig& config, std::uint64_t seed) {
  BasicTensor<T> x({config.in_channels, config.grid, config.grid});
  std::mt19937_64 rng(seed);
  std::normal_distribution<T> normal;
  for (auto& v : x.values()) v = normal(rng);
  return x;
}

// range(0) is conv1_filters; 256 is the full model.
template <typename T>
void BM_Forward(benchmark::State& state) {
  ModelConfig config;
  config.conv1_filters = static_cast<std::size_t>(state.range(0));
  const auto params = init_params<T>(config, 1);
  const auto x = random_input<T>(config, 2);
  for (auto _ : state) benchmark::DoNotOptimize(forward(x, params, config));
}
BENCHMARK(BM_Forward<float>)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Forward<double>)->Arg(32)->Unit(benchmark::kMillisecond);

template <typename T>
void BM_ForwardBackward(benchmark::State& state) {
  ModelConfig config;
  config.conv1_filters = static_cast<std::size_t>(state.range(0));
  const auto params = init_params<T>(config, 1);
  const auto x = random_input<T>(config, 2);
  auto grads = zero_params<T>(config);
  for (auto _ : state) {
    const auto fwd = forward(x, params, config);
    backward(fwd.cache, 1, params, config, grads);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_ForwardBackward<float>)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Routing(benchmark::State& state) {
  Tensor u_hat({2048, 2, 16});
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 0.1);
  for (auto& v : u_hat.values()) v = normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(dynamic_routing(u_hat, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_Routing)->Arg(1)->Arg(3)->Unit(benchmark::kMicrosecond);

void BM_WelchEpoch(benchmark::State& state) {
  const double fs = static_cast<double>(state.range(0));
  std::vector<double> x(static_cast<std::size_t>(5 * fs));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  for (auto& v : x) v = normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(welch_psd(x, fs));
}
BENCHMARK(BM_WelchEpoch)->Arg(200)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_Filtfilt(benchmark::State& state) {
  const double fs = 1000.0;
  const auto fir = design_bandpass_fir(0.5, 45.0, fs, default_fir_taps(fs));
  std::vector<double> x(60 * 1000);
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = std::sin(2.0 * std::numbers::pi * 10.0 * static_cast<double>(t) / fs);
  for (auto _ : state) benchmark::DoNotOptimize(filtfilt(x, fir.coefficients));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}
BENCHMARK(BM_Filtfilt)->Unit(benchmark::kMillisecond);

void BM_Interpolate(benchmark::State& state) {
  const auto projected = project_aep(default_layout());
  const auto grid = build_grid(projected);
  std::vector<double> values(projected.points.size());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (auto& v : values) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(interpolate_scatter(projected, values, grid));
}
BENCHMARK(BM_Interpolate)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
