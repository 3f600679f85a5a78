#pragma once

#include <functional>

#include "lid/tensor.hpp"

namespace lid::nn {

// Central-difference gradient of f at `point`, one coordinate at a time.
inline Tensor<double> finite_diff_grad(const std::function<double(const Tensor<double>&)>& f,
                                       const Tensor<double>& point, double h = 1e-5) {
  if (!(h > 0)) throw InvalidArgument("finite_diff_grad: step must be positive");
  Tensor<double> grad(point.shape());
  Tensor<double> x = point;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f(x);
    x[i] = orig - h;
    const double down = f(x);
    x[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

// max |a - b| / max(1e-8, max(|a|, |b|)) over the whole tensor, using the
// tensor-wide magnitude so near-zero coordinates do not dominate.
inline double relative_error(const Tensor<double>& a, const Tensor<double>& b) {
  if (a.size() != b.size()) throw InvalidArgument("relative_error: size mismatch");
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return diff / std::max(scale, 1e-8);
}

}  // namespace lid::nn
