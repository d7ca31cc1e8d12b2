#pragma once

#include <cstddef>
#include <vector>

#include "eegcaps/capsnet/tensor.hpp"

namespace eegcaps::capsnet {

// Log priors b and couplings c, both [N x J].
template <typename T>
struct RoutingState {
  BasicTensor<T> b;
  BasicTensor<T> c;
};

// Per-iteration intermediates kept for backpropagation through the unrolled loop.
template <typename T>
struct RoutingTrace {
  std::vector<BasicTensor<T>> c;  // couplings used in iteration t
  std::vector<BasicTensor<T>> s;  // [J x Dout] weighted sums
  std::vector<BasicTensor<T>> v;  // [J x Dout] squashed outputs
};

template <typename T>
struct RoutingResult {
  BasicTensor<T> v;  // [J x Dout]
  RoutingState<T> final_state;
  RoutingTrace<T> trace;
};

// Routing-by-agreement over predictions u_hat [N x J x Dout] starting from b = 0.
// Each iteration: c = softmax_j(b), s_j = sum_i c_ij u_hat_ij, v_j = squash(s_j),
// then b_ij += u_hat_ij . v_j except after the last iteration.
template <typename T>
RoutingResult<T> dynamic_routing(const BasicTensor<T>& u_hat, std::size_t iterations);

// Gradient of the routed output with respect to u_hat, with c, b, s and v all
// differentiated (no stop-gradient).
template <typename T>
BasicTensor<T> dynamic_routing_backward(const BasicTensor<T>& u_hat, const RoutingTrace<T>& trace,
                                        const BasicTensor<T>& grad_v);

}  // namespace eegcaps::capsnet
