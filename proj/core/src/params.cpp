#include "lid/params.hpp"

#include <cmath>

namespace lid::nn {

template <typename Real>
std::size_t ParamSet<Real>::add(std::string name, Group group, Tensor<Real> init) {
  for (const auto& p : params_)
    if (p.name == name) throw InvalidArgument("duplicate parameter name '" + name + "'");
  params_.emplace_back(std::move(name), group, std::move(init));
  return params_.size() - 1;
}

template <typename Real>
Parameter<Real>& ParamSet<Real>::get(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw InvalidArgument("unknown parameter '" + name + "'");
}

template <typename Real>
const Parameter<Real>& ParamSet<Real>::get(const std::string& name) const {
  return const_cast<ParamSet*>(this)->get(name);
}

template <typename Real>
std::size_t ParamSet<Real>::element_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

template <typename Real>
void ParamSet<Real>::zero_grad() {
  for (auto& p : params_) p.grad.fill(Real(0));
}

void AdamConfig::validate() const {
  if (!(learning_rate > 0)) throw InvalidArgument("adam: learning rate must be positive");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) throw InvalidArgument("adam: betas must lie in [0, 1)");
  if (!(epsilon > 0)) throw InvalidArgument("adam: epsilon must be positive");
}

template <typename Real>
void adam_step(ParamSet<Real>& params, const AdamConfig& cfg) {
  cfg.validate();
  params.step_count += 1;
  const double t = static_cast<double>(params.step_count);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  const Real b1 = static_cast<Real>(cfg.beta1), b2 = static_cast<Real>(cfg.beta2);
  const Real lr = static_cast<Real>(cfg.learning_rate), eps = static_cast<Real>(cfg.epsilon);
  const Real inv_c1 = static_cast<Real>(1.0 / c1), inv_c2 = static_cast<Real>(1.0 / c2);
  for (auto& p : params) {
    Real* w = p.value.ptr();
    Real* g = p.grad.ptr();
    Real* m = p.m.ptr();
    Real* v = p.v.ptr();
    for (std::size_t i = 0, n = p.value.size(); i < n; ++i) {
      m[i] = b1 * m[i] + (Real(1) - b1) * g[i];
      v[i] = b2 * v[i] + (Real(1) - b2) * g[i] * g[i];
      const Real mhat = m[i] * inv_c1;
      const Real vhat = v[i] * inv_c2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      g[i] = Real(0);
    }
  }
}

template class ParamSet<float>;
template class ParamSet<double>;
template void adam_step(ParamSet<float>&, const AdamConfig&);
template void adam_step(ParamSet<double>&, const AdamConfig&);

}  // namespace lid::nn
