#pragma once

#include <cstddef>
#include <span>

#include "eegcaps/capsnet/tensor.hpp"

namespace eegcaps::capsnet {

// Valid (unpadded) cross-correlation. input [C x H x W], kernels [F x C x k x k],
// bias [F], result [F x H' x W'] with H' = (H - k) / stride + 1.
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                              const BasicTensor<T>& bias, std::size_t stride, bool relu);

// Gradients of a conv2d_forward call. `output` is the forward result (used for
// the ReLU mask when relu is set). grad_input is skipped when null.
template <typename T>
void conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                     std::size_t stride, bool relu, const BasicTensor<T>& output,
                     const BasicTensor<T>& grad_output, BasicTensor<T>& grad_kernels,
                     BasicTensor<T>& grad_bias, BasicTensor<T>* grad_input);

// v = (|s|^2 / (1 + |s|^2)) * s / |s|, and v = 0 at s = 0.
template <typename T>
void squash(std::span<const T> s, std::span<T> v);

// Vector-Jacobian product of squash evaluated at s.
template <typename T>
void squash_backward(std::span<const T> s, std::span<const T> grad_v, std::span<T> grad_s);

// u [N x Din], W [N x J x Dout x Din] -> u_hat [N x J x Dout], u_hat[i][j] = W[i][j] u[i].
template <typename T>
BasicTensor<T> predict_vectors(const BasicTensor<T>& u, const BasicTensor<T>& W);

template <typename T>
void predict_vectors_backward(const BasicTensor<T>& u, const BasicTensor<T>& W,
                              const BasicTensor<T>& grad_u_hat, BasicTensor<T>& grad_W,
                              BasicTensor<T>& grad_u);

// Row-wise softmax over the last axis of a [N x J] tensor, max-subtracted.
template <typename T>
BasicTensor<T> routing_softmax(const BasicTensor<T>& b);

}  // namespace eegcaps::capsnet
