#pragma once

#include <cstdint>
#include <vector>

#include "lid/tensor.hpp"

// Forward and hand-derived backward passes for the layers of the LID
// network.  Sequence activations are [batch, time, channels]; rank-2
// [time, channels] inputs are treated as a batch of one.

namespace lid::nn {

enum class Mode { train, eval };

// Valid (unpadded) stride-1 temporal convolution.
// x: [B, T, Cin] or [T, Cin]; weight: [Cout, Cin, W]; bias: [Cout].
// out[b, t, o] = bias[o] + sum_{c,w} x[b, t + w, c] * weight[o, c, w].
template <typename Real>
Tensor<Real> conv1d_forward(const Tensor<Real>& x, const Tensor<Real>& weight, const Tensor<Real>& bias);

template <typename Real>
struct Conv1dGrads {
  Tensor<Real> input;
  Tensor<Real> weight;
  Tensor<Real> bias;
};

template <typename Real>
Conv1dGrads<Real> conv1d_backward(const Tensor<Real>& x, const Tensor<Real>& weight, const Tensor<Real>& grad_out);

// Output length of a valid convolution, or throws when input < width.
std::size_t conv1d_output_length(std::size_t input_length, std::size_t width);

// Running statistics used in eval mode.  Initialized to mean 0, var 1.
template <typename Real>
struct BatchNormStats {
  Tensor<Real> running_mean;
  Tensor<Real> running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  explicit BatchNormStats(std::size_t channels = 0)
      : running_mean({channels}, Real(0)), running_var({channels}, Real(1)) {}
};

template <typename Real>
struct BatchNormCache {
  Mode mode = Mode::train;
  Tensor<Real> xhat;
  std::vector<Real> inv_std;
};

// Normalizes over every leading axis (batch and time) per channel (last
// axis).  Train mode needs at least two rows and updates the running stats
// with the unbiased batch variance.
template <typename Real>
Tensor<Real> batchnorm_forward(const Tensor<Real>& x, const Tensor<Real>& gamma, const Tensor<Real>& beta,
                               BatchNormStats<Real>& stats, Mode mode, BatchNormCache<Real>* cache);

template <typename Real>
struct BatchNormGrads {
  Tensor<Real> input;
  Tensor<Real> gamma;
  Tensor<Real> beta;
};

template <typename Real>
BatchNormGrads<Real> batchnorm_backward(const BatchNormCache<Real>& cache, const Tensor<Real>& gamma,
                                        const Tensor<Real>& grad_out);

template <typename Real>
Tensor<Real> relu_forward(const Tensor<Real>& x);
// Gradient passes where the forward input was strictly positive.
template <typename Real>
Tensor<Real> relu_backward(const Tensor<Real>& x, const Tensor<Real>& grad_out);

// Global max over time: [B, T, C] -> [B, C].  argmax[b * C + c] holds the
// first time index attaining the maximum.
template <typename Real>
struct MaxPoolResult {
  Tensor<Real> output;
  std::vector<std::uint32_t> argmax;
};

template <typename Real>
MaxPoolResult<Real> maxpool_time_forward(const Tensor<Real>& x);
template <typename Real>
Tensor<Real> maxpool_time_backward(const Tensor<Real>& grad_out, const std::vector<std::uint32_t>& argmax,
                                   std::size_t time_steps);

// x: [B, I]; weight: [O, I]; bias: [O].
template <typename Real>
Tensor<Real> linear_forward(const Tensor<Real>& x, const Tensor<Real>& weight, const Tensor<Real>& bias);

template <typename Real>
struct LinearGrads {
  Tensor<Real> input;
  Tensor<Real> weight;
  Tensor<Real> bias;
};

template <typename Real>
LinearGrads<Real> linear_backward(const Tensor<Real>& x, const Tensor<Real>& weight, const Tensor<Real>& grad_out);

// Row-wise max-shifted softmax.
template <typename Real>
Tensor<Real> softmax(const Tensor<Real>& logits);

template <typename Real>
struct XentResult {
  double loss = 0.0;         // mean over rows
  Tensor<Real> grad;         // (p - onehot) / batch
  Tensor<Real> probabilities;
};

template <typename Real>
XentResult<Real> softmax_xent(const Tensor<Real>& logits, const std::vector<int>& labels);

// Gradient reversal: identity forward, -lambda * g backward.
template <typename Real>
Tensor<Real> grl_forward(const Tensor<Real>& x) {
  return x;
}

template <typename Real>
Tensor<Real> grl_backward(const Tensor<Real>& grad_out, double lambda) {
  Tensor<Real> g = grad_out;
  const Real scale = -static_cast<Real>(lambda);
  for (auto& v : g.data()) v = scale * v;
  return g;
}

}  // namespace lid::nn
