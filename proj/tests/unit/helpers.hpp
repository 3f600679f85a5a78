#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "lid/common.hpp"
#include "lid/tensor.hpp"

namespace lid::testing {

inline nn::Tensor<double> random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
  nn::Tensor<double> t(std::move(shape));
  for (auto& v : t.data()) v = scale * rng.gaussian();
  return t;
}

// Sum of w * y: a scalar loss with a known upstream gradient w.
inline double weighted_sum(const nn::Tensor<double>& y, const nn::Tensor<double>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
  return s;
}

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("lid_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace lid::testing
