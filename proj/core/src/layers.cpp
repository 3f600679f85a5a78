#include "lid/layers.hpp"

#include <Eigen/Core>
#include <limits>

namespace lid::nn {

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "x" : "") + std::to_string(shape[i]);
  return s + "]";
}

namespace {

template <typename Real>
using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Real>
using MapMat = Eigen::Map<RowMat<Real>>;
template <typename Real>
using CMapMat = Eigen::Map<const RowMat<Real>>;
template <typename Real>
using CMapVec = Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>>;

struct SeqShape {
  std::size_t batch, time, channels;
  bool batched;
};

template <typename Real>
SeqShape seq_shape(const Tensor<Real>& x, const char* what) {
  if (x.rank() == 3) return {x.dim(0), x.dim(1), x.dim(2), true};
  if (x.rank() == 2) return {1, x.dim(0), x.dim(1), false};
  throw InvalidArgument(std::string(what) + ": expected [B,T,C] or [T,C], got " + shape_string(x.shape()));
}

// rows (b, t) for t < out_len; columns (c, w) matching weight[o, c, w].
template <typename Real>
RowMat<Real> im2col(const Tensor<Real>& x, const SeqShape& s, std::size_t width, std::size_t out_len) {
  RowMat<Real> cols(static_cast<Eigen::Index>(s.batch * out_len), static_cast<Eigen::Index>(s.channels * width));
  const Real* in = x.ptr();
  for (std::size_t b = 0; b < s.batch; ++b) {
    for (std::size_t t = 0; t < out_len; ++t) {
      Real* row = cols.data() + (b * out_len + t) * s.channels * width;
      for (std::size_t c = 0; c < s.channels; ++c)
        for (std::size_t w = 0; w < width; ++w) row[c * width + w] = in[(b * s.time + t + w) * s.channels + c];
    }
  }
  return cols;
}

}  // namespace

std::size_t conv1d_output_length(std::size_t input_length, std::size_t width) {
  if (width == 0) throw InvalidArgument("conv1d: zero filter width");
  if (input_length < width)
    throw InvalidArgument("conv1d: input length " + std::to_string(input_length) + " shorter than filter width " +
                          std::to_string(width));
  return input_length - width + 1;
}

template <typename Real>
Tensor<Real> conv1d_forward(const Tensor<Real>& x, const Tensor<Real>& weight, const Tensor<Real>& bias) {
  const SeqShape s = seq_shape(x, "conv1d");
  if (weight.rank() != 3 || weight.dim(1) != s.channels)
    throw InvalidArgument("conv1d: weight " + shape_string(weight.shape()) + " incompatible with input " +
                          shape_string(x.shape()));
  const std::size_t cout = weight.dim(0), width = weight.dim(2);
  if (bias.size() != cout) throw InvalidArgument("conv1d: bias size mismatch");
  const std::size_t out_len = conv1d_output_length(s.time, width);

  const RowMat<Real> cols = im2col(x, s, width, out_len);
  Tensor<Real> out(s.batched ? std::vector<std::size_t>{s.batch, out_len, cout}
                             : std::vector<std::size_t>{out_len, cout});
  MapMat<Real> o(out.ptr(), static_cast<Eigen::Index>(s.batch * out_len), static_cast<Eigen::Index>(cout));
  CMapMat<Real> w(weight.ptr(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(s.channels * width));
  o.noalias() = cols * w.transpose();
  o.rowwise() += CMapVec<Real>(bias.ptr(), static_cast<Eigen::Index>(cout));
  return out;
}

template <typename Real>
Conv1dGrads<Real> conv1d_backward(const Tensor<Real>& x, const Tensor<Real>& weight, const Tensor<Real>& grad_out) {
  const SeqShape s = seq_shape(x, "conv1d");
  const std::size_t cout = weight.dim(0), width = weight.dim(2);
  const std::size_t out_len = conv1d_output_length(s.time, width);
  if (grad_out.size() != s.batch * out_len * cout) throw InvalidArgument("conv1d backward: gradient shape mismatch");

  const RowMat<Real> cols = im2col(x, s, width, out_len);
  CMapMat<Real> go(grad_out.ptr(), static_cast<Eigen::Index>(s.batch * out_len), static_cast<Eigen::Index>(cout));
  CMapMat<Real> w(weight.ptr(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(s.channels * width));

  Conv1dGrads<Real> g{Tensor<Real>(x.shape()), Tensor<Real>(weight.shape()), Tensor<Real>({cout})};
  MapMat<Real> gw(g.weight.ptr(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(s.channels * width));
  gw.noalias() = go.transpose() * cols;
  Eigen::Map<Eigen::Matrix<Real, 1, Eigen::Dynamic>>(g.bias.ptr(), static_cast<Eigen::Index>(cout)) =
      go.colwise().sum();

  const RowMat<Real> gcols = go * w;
  Real* gx = g.input.ptr();
  for (std::size_t b = 0; b < s.batch; ++b) {
    for (std::size_t t = 0; t < out_len; ++t) {
      const Real* row = gcols.data() + (b * out_len + t) * s.channels * width;
      for (std::size_t c = 0; c < s.channels; ++c)
        for (std::size_t k = 0; k < width; ++k) gx[(b * s.time + t + k) * s.channels + c] += row[c * width + k];
    }
  }
  return g;
}

template <typename Real>
Tensor<Real> batchnorm_forward(const Tensor<Real>& x, const Tensor<Real>& gamma, const Tensor<Real>& beta,
                               BatchNormStats<Real>& stats, Mode mode, BatchNormCache<Real>* cache) {
  if (x.rank() < 2) throw InvalidArgument("batchnorm: input needs a channel axis");
  const std::size_t c = x.shape().back();
  const std::size_t n = x.size() / c;
  if (gamma.size() != c || beta.size() != c || stats.running_mean.size() != c)
    throw InvalidArgument("batchnorm: parameter size mismatch");

  std::vector<double> mean(c, 0.0), var(c, 0.0);
  if (mode == Mode::train) {
    if (n < 2) throw InvalidArgument("batchnorm: train mode needs at least 2 rows per channel");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < c; ++k) mean[k] += x[i * c + k];
    for (auto& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < c; ++k) {
        const double d = x[i * c + k] - mean[k];
        var[k] += d * d;
      }
    for (std::size_t k = 0; k < c; ++k) {
      const double biased = var[k] / static_cast<double>(n);
      const double unbiased = var[k] / static_cast<double>(n - 1);
      var[k] = biased;
      stats.running_mean[k] =
          static_cast<Real>((1.0 - stats.momentum) * stats.running_mean[k] + stats.momentum * mean[k]);
      stats.running_var[k] =
          static_cast<Real>((1.0 - stats.momentum) * stats.running_var[k] + stats.momentum * unbiased);
    }
  } else {
    for (std::size_t k = 0; k < c; ++k) {
      mean[k] = stats.running_mean[k];
      var[k] = stats.running_var[k];
    }
  }

  std::vector<Real> inv_std(c);
  for (std::size_t k = 0; k < c; ++k) inv_std[k] = static_cast<Real>(1.0 / std::sqrt(var[k] + stats.eps));
  Tensor<Real> out(x.shape());
  Tensor<Real> xhat;
  if (cache) xhat = Tensor<Real>(x.shape());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < c; ++k) {
      const Real h = (x[i * c + k] - static_cast<Real>(mean[k])) * inv_std[k];
      if (cache) xhat[i * c + k] = h;
      out[i * c + k] = gamma[k] * h + beta[k];
    }
  }
  if (cache) {
    cache->mode = mode;
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

template <typename Real>
BatchNormGrads<Real> batchnorm_backward(const BatchNormCache<Real>& cache, const Tensor<Real>& gamma,
                                        const Tensor<Real>& grad_out) {
  const Tensor<Real>& xhat = cache.xhat;
  const std::size_t c = gamma.size();
  const std::size_t n = xhat.size() / c;
  if (grad_out.size() != xhat.size()) throw InvalidArgument("batchnorm backward: gradient shape mismatch");
  BatchNormGrads<Real> g{Tensor<Real>(xhat.shape()), Tensor<Real>({c}), Tensor<Real>({c})};
  std::vector<Real> sum_dy(c, Real(0)), sum_dy_xhat(c, Real(0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < c; ++k) {
      sum_dy[k] += grad_out[i * c + k];
      sum_dy_xhat[k] += grad_out[i * c + k] * xhat[i * c + k];
    }
  for (std::size_t k = 0; k < c; ++k) {
    g.beta[k] = sum_dy[k];
    g.gamma[k] = sum_dy_xhat[k];
  }
  if (cache.mode == Mode::eval) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < c; ++k) g.input[i * c + k] = grad_out[i * c + k] * gamma[k] * cache.inv_std[k];
    return g;
  }
  // dx = gamma * inv_std / N * (N * dy - sum(dy) - xhat * sum(dy * xhat))
  const Real nr = static_cast<Real>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < c; ++k) {
      const Real scale = gamma[k] * cache.inv_std[k] / nr;
      g.input[i * c + k] = scale * (nr * grad_out[i * c + k] - sum_dy[k] - xhat[i * c + k] * sum_dy_xhat[k]);
    }
  return g;
}

template <typename Real>
Tensor<Real> relu_forward(const Tensor<Real>& x) {
  Tensor<Real> out = x;
  for (auto& v : out.data()) v = v > Real(0) ? v : Real(0);
  return out;
}

template <typename Real>
Tensor<Real> relu_backward(const Tensor<Real>& x, const Tensor<Real>& grad_out) {
  if (x.size() != grad_out.size()) throw InvalidArgument("relu backward: shape mismatch");
  Tensor<Real> g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] > Real(0) ? grad_out[i] : Real(0);
  return g;
}

template <typename Real>
MaxPoolResult<Real> maxpool_time_forward(const Tensor<Real>& x) {
  const SeqShape s = seq_shape(x, "maxpool");
  if (s.time < 1) throw InvalidArgument("maxpool: empty time axis");
  MaxPoolResult<Real> r{Tensor<Real>(s.batched ? std::vector<std::size_t>{s.batch, s.channels}
                                                : std::vector<std::size_t>{s.channels}),
                        std::vector<std::uint32_t>(s.batch * s.channels, 0)};
  for (std::size_t b = 0; b < s.batch; ++b) {
    for (std::size_t c = 0; c < s.channels; ++c) {
      std::size_t best = 0;
      Real v = x[(b * s.time) * s.channels + c];
      for (std::size_t t = 1; t < s.time; ++t) {
        const Real u = x[(b * s.time + t) * s.channels + c];
        if (u > v) {
          v = u;
          best = t;
        }
      }
      r.output[b * s.channels + c] = v;
      r.argmax[b * s.channels + c] = static_cast<std::uint32_t>(best);
    }
  }
  return r;
}

template <typename Real>
Tensor<Real> maxpool_time_backward(const Tensor<Real>& grad_out, const std::vector<std::uint32_t>& argmax,
                                   std::size_t time_steps) {
  const std::size_t batch = grad_out.rank() == 2 ? grad_out.dim(0) : 1;
  const std::size_t channels = grad_out.shape().back();
  if (argmax.size() != batch * channels) throw InvalidArgument("maxpool backward: argmax size mismatch");
  Tensor<Real> g(grad_out.rank() == 2 ? std::vector<std::size_t>{batch, time_steps, channels}
                                      : std::vector<std::size_t>{time_steps, channels});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c)
      g[(b * time_steps + argmax[b * channels + c]) * channels + c] = grad_out[b * channels + c];
  return g;
}

template <typename Real>
Tensor<Real> linear_forward(const Tensor<Real>& x, const Tensor<Real>& weight, const Tensor<Real>& bias) {
  if (x.rank() != 2 || weight.rank() != 2 || weight.dim(1) != x.dim(1) || bias.size() != weight.dim(0))
    throw InvalidArgument("linear: shape mismatch between input " + shape_string(x.shape()) + " and weight " +
                          shape_string(weight.shape()));
  const auto b = static_cast<Eigen::Index>(x.dim(0));
  const auto in = static_cast<Eigen::Index>(x.dim(1));
  const auto out_dim = static_cast<Eigen::Index>(weight.dim(0));
  Tensor<Real> out({x.dim(0), weight.dim(0)});
  MapMat<Real> o(out.ptr(), b, out_dim);
  o.noalias() = CMapMat<Real>(x.ptr(), b, in) * CMapMat<Real>(weight.ptr(), out_dim, in).transpose();
  o.rowwise() += CMapVec<Real>(bias.ptr(), out_dim);
  return out;
}

template <typename Real>
LinearGrads<Real> linear_backward(const Tensor<Real>& x, const Tensor<Real>& weight, const Tensor<Real>& grad_out) {
  const auto b = static_cast<Eigen::Index>(x.dim(0));
  const auto in = static_cast<Eigen::Index>(x.dim(1));
  const auto out_dim = static_cast<Eigen::Index>(weight.dim(0));
  if (grad_out.rank() != 2 || grad_out.dim(0) != x.dim(0) || grad_out.dim(1) != weight.dim(0))
    throw InvalidArgument("linear backward: gradient shape mismatch");
  LinearGrads<Real> g{Tensor<Real>(x.shape()), Tensor<Real>(weight.shape()), Tensor<Real>({weight.dim(0)})};
  CMapMat<Real> go(grad_out.ptr(), b, out_dim);
  MapMat<Real>(g.input.ptr(), b, in).noalias() = go * CMapMat<Real>(weight.ptr(), out_dim, in);
  MapMat<Real>(g.weight.ptr(), out_dim, in).noalias() = go.transpose() * CMapMat<Real>(x.ptr(), b, in);
  Eigen::Map<Eigen::Matrix<Real, 1, Eigen::Dynamic>>(g.bias.ptr(), out_dim) = go.colwise().sum();
  return g;
}

template <typename Real>
Tensor<Real> softmax(const Tensor<Real>& logits) {
  if (logits.rank() != 2) throw InvalidArgument("softmax: expected [B, K]");
  const std::size_t rows = logits.dim(0), k = logits.dim(1);
  Tensor<Real> p(logits.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* z = logits.ptr() + r * k;
    Real* out = p.ptr() + r * k;
    const Real mx = *std::max_element(z, z + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double e = std::exp(static_cast<double>(z[j] - mx));
      out[j] = static_cast<Real>(e);
      sum += e;
    }
    for (std::size_t j = 0; j < k; ++j) out[j] = static_cast<Real>(out[j] / sum);
  }
  return p;
}

template <typename Real>
XentResult<Real> softmax_xent(const Tensor<Real>& logits, const std::vector<int>& labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size())
    throw InvalidArgument("softmax_xent: logits/labels size mismatch");
  const std::size_t rows = logits.dim(0), k = logits.dim(1);
  if (rows == 0) throw InvalidArgument("softmax_xent: empty batch");
  XentResult<Real> r;
  r.probabilities = Tensor<Real>(logits.shape());
  r.grad = Tensor<Real>(logits.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= k)
      throw InvalidArgument("softmax_xent: label " + std::to_string(y) + " out of range [0, " + std::to_string(k) +
                            ")");
    const Real* z = logits.ptr() + i * k;
    const double mx = static_cast<double>(*std::max_element(z, z + k));
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(static_cast<double>(z[j]) - mx);
    const double log_sum = std::log(sum);
    total += log_sum - (static_cast<double>(z[y]) - mx);
    for (std::size_t j = 0; j < k; ++j) {
      const double p = std::exp(static_cast<double>(z[j]) - mx - log_sum);
      r.probabilities[i * k + j] = static_cast<Real>(p);
      const double onehot = static_cast<std::size_t>(y) == j ? 1.0 : 0.0;
      r.grad[i * k + j] = static_cast<Real>((p - onehot) / static_cast<double>(rows));
    }
  }
  r.loss = total / static_cast<double>(rows);
  return r;
}

#define LID_INSTANTIATE_LAYERS(Real)                                                                              \
  template Tensor<Real> conv1d_forward(const Tensor<Real>&, const Tensor<Real>&, const Tensor<Real>&);           \
  template Conv1dGrads<Real> conv1d_backward(const Tensor<Real>&, const Tensor<Real>&, const Tensor<Real>&);     \
  template Tensor<Real> batchnorm_forward(const Tensor<Real>&, const Tensor<Real>&, const Tensor<Real>&,         \
                                          BatchNormStats<Real>&, Mode, BatchNormCache<Real>*);                   \
  template BatchNormGrads<Real> batchnorm_backward(const BatchNormCache<Real>&, const Tensor<Real>&,             \
                                                   const Tensor<Real>&);                                         \
  template Tensor<Real> relu_forward(const Tensor<Real>&);                                                        \
  template Tensor<Real> relu_backward(const Tensor<Real>&, const Tensor<Real>&);                                  \
  template MaxPoolResult<Real> maxpool_time_forward(const Tensor<Real>&);                                         \
  template Tensor<Real> maxpool_time_backward(const Tensor<Real>&, const std::vector<std::uint32_t>&,             \
                                              std::size_t);                                                       \
  template Tensor<Real> linear_forward(const Tensor<Real>&, const Tensor<Real>&, const Tensor<Real>&);            \
  template LinearGrads<Real> linear_backward(const Tensor<Real>&, const Tensor<Real>&, const Tensor<Real>&);      \
  template Tensor<Real> softmax(const Tensor<Real>&);                                                             \
  template XentResult<Real> softmax_xent(const Tensor<Real>&, const std::vector<int>&);

LID_INSTANTIATE_LAYERS(float)
LID_INSTANTIATE_LAYERS(double)

}  // namespace lid::nn
