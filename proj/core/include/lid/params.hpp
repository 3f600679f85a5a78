#pragma once

#include <string>
#include <vector>

#include "lid/tensor.hpp"

namespace lid::nn {

// Which sub-network a parameter belongs to: feature extractor F,
// language classifier G or domain classifier D.
enum class Group { feature, language, domain };

template <typename Real>
struct Parameter {
  std::string name;
  Group group = Group::feature;
  Tensor<Real> value;
  Tensor<Real> grad;
  Tensor<Real> m;  // Adam first moment
  Tensor<Real> v;  // Adam second moment

  Parameter(std::string n, Group g, Tensor<Real> init)
      : name(std::move(n)), group(g), value(std::move(init)), grad(value.shape()), m(value.shape()),
        v(value.shape()) {}
};

template <typename Real>
class ParamSet {
 public:
  // Returns the index of the new parameter; names must be unique.
  std::size_t add(std::string name, Group group, Tensor<Real> init);

  std::size_t size() const { return params_.size(); }
  Parameter<Real>& operator[](std::size_t i) { return params_[i]; }
  const Parameter<Real>& operator[](std::size_t i) const { return params_[i]; }
  Parameter<Real>& get(const std::string& name);
  const Parameter<Real>& get(const std::string& name) const;
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::size_t element_count() const;
  void zero_grad();

  long long step_count = 0;

 private:
  std::vector<Parameter<Real>> params_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

// One bias-corrected Adam update over every parameter, then zeroes the
// gradients and increments step_count.
template <typename Real>
void adam_step(ParamSet<Real>& params, const AdamConfig& cfg);

}  // namespace lid::nn
