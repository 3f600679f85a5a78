#include "lid/model.hpp"

#include <cmath>

namespace lid::model {

using nn::Group;

void LidModelConfig::validate() const {
  if (input_dim < 1) throw InvalidArgument("model: input_dim must be >= 1");
  if (conv.empty()) throw InvalidArgument("model: at least one convolution layer is required");
  for (const auto& c : conv)
    if (c.filters < 1 || c.width < 1) throw InvalidArgument("model: convolution filters and width must be >= 1");
  if (fc_dim < 1 || embed_dim < 1) throw InvalidArgument("model: fully connected widths must be >= 1");
  for (auto h : domain_hidden)
    if (h < 1) throw InvalidArgument("model: domain hidden widths must be >= 1");
  if (n_languages < 2) throw InvalidArgument("model: n_languages must be >= 2");
  if (n_domains < 2) throw InvalidArgument("model: n_domains must be >= 2");
}

std::size_t LidModelConfig::min_frames() const {
  std::size_t t = 1;
  for (const auto& c : conv) t += c.width - 1;
  return t;
}

std::size_t LidModelConfig::parameter_count() const {
  std::size_t n = 0, in = input_dim;
  for (const auto& c : conv) {
    n += c.filters * in * c.width + c.filters + 2 * c.filters;
    in = c.filters;
  }
  auto dense = [&n](std::size_t i, std::size_t o) { n += o * i + o; };
  dense(in, fc_dim);
  dense(fc_dim, embed_dim);
  dense(embed_dim, n_languages);
  std::size_t prev = fc_dim;
  for (auto h : domain_hidden) {
    dense(prev, h);
    prev = h;
  }
  dense(prev, n_domains);
  return n;
}

std::vector<ConvSpec> parse_conv_specs(const std::string& text) {
  std::vector<ConvSpec> out;
  for (const auto& part : split(text, ',')) {
    const auto fields = split(trim(part), 'x');
    if (fields.size() != 2) throw ConfigError("conv spec '" + part + "' is not FILTERSxWIDTH");
    long long f = 0, w = 0;
    try {
      f = parse_int(fields[0]);
      w = parse_int(fields[1]);
    } catch (const InvalidArgument&) {
      throw ConfigError("conv spec '" + part + "' is not FILTERSxWIDTH");
    }
    if (f < 1 || w < 1) throw ConfigError("conv spec '" + part + "' must be positive");
    out.push_back({static_cast<std::size_t>(f), static_cast<std::size_t>(w)});
  }
  return out;
}

std::string format_conv_specs(const std::vector<ConvSpec>& specs) {
  std::string s;
  for (const auto& c : specs) s += (s.empty() ? "" : ",") + std::to_string(c.filters) + "x" + std::to_string(c.width);
  return s;
}

namespace {

// Uniform(-limit, limit) drawn in double so float and double networks
// start from the same point.
template <typename Real>
Tensor<Real> uniform_init(std::vector<std::size_t> shape, double limit, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<Real> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<Real>(rng.uniform(-limit, limit));
  return t;
}

}  // namespace

template <typename Real>
LidNetwork<Real>::LidNetwork(const LidModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  auto seed_for = [&](const std::string& name) { return derive_seed(cfg_.seed, name); };
  auto dense = [&](const std::string& name, Group g, std::size_t in, std::size_t out, bool relu_after) {
    // Output layers start small so the initial posteriors are near uniform.
    const double limit = relu_after ? std::sqrt(6.0 / static_cast<double>(in))
                                    : 0.1 * std::sqrt(6.0 / static_cast<double>(in + out));
    const std::size_t w = params_.add(name + ".weight", g, uniform_init<Real>({out, in}, limit, seed_for(name)));
    params_.add(name + ".bias", g, Tensor<Real>({out}));
    return w;
  };

  std::size_t in = cfg_.input_dim;
  for (std::size_t i = 0; i < cfg_.conv.size(); ++i) {
    const auto& c = cfg_.conv[i];
    const std::string name = "conv" + std::to_string(i + 1);
    const double limit = std::sqrt(6.0 / static_cast<double>(in * c.width));
    conv_.push_back(params_.add(name + ".weight", Group::feature,
                                uniform_init<Real>({c.filters, in, c.width}, limit, seed_for(name))));
    params_.add(name + ".bias", Group::feature, Tensor<Real>({c.filters}));
    const std::string bn = "bn" + std::to_string(i + 1);
    bn_param_.push_back(params_.add(bn + ".gamma", Group::feature, Tensor<Real>({c.filters}, Real(1))));
    params_.add(bn + ".beta", Group::feature, Tensor<Real>({c.filters}));
    bn_.emplace_back(c.filters);
    in = c.filters;
  }
  fc4_ = dense("fc4", Group::feature, in, cfg_.fc_dim, true);
  g_layers_.push_back(dense("fc5", Group::language, cfg_.fc_dim, cfg_.embed_dim, true));
  g_layers_.push_back(dense("out", Group::language, cfg_.embed_dim, cfg_.n_languages, false));
  std::size_t prev = cfg_.fc_dim;
  for (std::size_t i = 0; i < cfg_.domain_hidden.size(); ++i) {
    d_layers_.push_back(dense("dom" + std::to_string(i + 1), Group::domain, prev, cfg_.domain_hidden[i], true));
    prev = cfg_.domain_hidden[i];
  }
  d_layers_.push_back(dense("dom_out", Group::domain, prev, cfg_.n_domains, false));
}

template <typename Real>
Tensor<Real> LidNetwork<Real>::forward_f(const Tensor<Real>& x, Mode mode, FeatureCache* cache) {
  if (x.rank() != 3 || x.dim(2) != cfg_.input_dim)
    throw InvalidArgument("model: expected input [B, T, " + std::to_string(cfg_.input_dim) + "], got " +
                          nn::shape_string(x.shape()));
  if (x.dim(1) < cfg_.min_frames())
    throw InvalidArgument("model: sequence of " + std::to_string(x.dim(1)) + " frames is shorter than the minimum " +
                          std::to_string(cfg_.min_frames()) + " frames required by the convolution stack");
  if (cache) *cache = FeatureCache{};
  Tensor<Real> h = x;
  for (std::size_t i = 0; i < conv_.size(); ++i) {
    Tensor<Real> c = nn::conv1d_forward(h, params_[conv_[i]].value, params_[conv_[i] + 1].value);
    nn::BatchNormCache<Real> bc;
    Tensor<Real> b = nn::batchnorm_forward(c, params_[bn_param_[i]].value, params_[bn_param_[i] + 1].value, bn_[i],
                                           mode, cache ? &bc : nullptr);
    Tensor<Real> r = nn::relu_forward(b);
    if (cache) {
      cache->conv_in.push_back(std::move(h));
      cache->bn.push_back(std::move(bc));
      cache->bn_out.push_back(std::move(b));
    }
    h = std::move(r);
  }
  auto pooled = nn::maxpool_time_forward(h);
  Tensor<Real> pre = nn::linear_forward(pooled.output, params_[fc4_].value, params_[fc4_ + 1].value);
  Tensor<Real> f = nn::relu_forward(pre);
  if (cache) {
    cache->argmax = std::move(pooled.argmax);
    cache->pooled_steps = h.dim(1);
    cache->pooled = std::move(pooled.output);
    cache->fc_pre = std::move(pre);
  }
  return f;
}

template <typename Real>
Tensor<Real> LidNetwork<Real>::infer_f(const Tensor<Real>& x) const {
  // Eval mode only reads the running statistics.
  return const_cast<LidNetwork*>(this)->forward_f(x, Mode::eval, nullptr);
}

namespace {

template <typename Real>
void accumulate(Tensor<Real>& into, const Tensor<Real>& g) {
  for (std::size_t i = 0; i < into.size(); ++i) into[i] += g[i];
}

}  // namespace

template <typename Real>
void LidNetwork<Real>::backward_f(const FeatureCache& cache, const Tensor<Real>& grad_f) {
  Tensor<Real> g = nn::relu_backward(cache.fc_pre, grad_f);
  auto lg = nn::linear_backward(cache.pooled, params_[fc4_].value, g);
  accumulate(params_[fc4_].grad, lg.weight);
  accumulate(params_[fc4_ + 1].grad, lg.bias);
  g = nn::maxpool_time_backward(lg.input, cache.argmax, cache.pooled_steps);
  for (std::size_t i = conv_.size(); i-- > 0;) {
    g = nn::relu_backward(cache.bn_out[i], g);
    auto bg = nn::batchnorm_backward(cache.bn[i], params_[bn_param_[i]].value, g);
    accumulate(params_[bn_param_[i]].grad, bg.gamma);
    accumulate(params_[bn_param_[i] + 1].grad, bg.beta);
    auto cg = nn::conv1d_backward(cache.conv_in[i], params_[conv_[i]].value, bg.input);
    accumulate(params_[conv_[i]].grad, cg.weight);
    accumulate(params_[conv_[i] + 1].grad, cg.bias);
    g = std::move(cg.input);
  }
}

template <typename Real>
Tensor<Real> LidNetwork<Real>::head_forward(const std::vector<std::size_t>& layers, const Tensor<Real>& x,
                                            HeadCache* cache) const {
  if (cache) *cache = HeadCache{};
  Tensor<Real> h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Tensor<Real> z = nn::linear_forward(h, params_[layers[i]].value, params_[layers[i] + 1].value);
    if (cache) cache->inputs.push_back(h);
    if (i + 1 == layers.size()) return z;
    h = nn::relu_forward(z);
    if (cache) cache->pre.push_back(std::move(z));
  }
  return h;
}

template <typename Real>
Tensor<Real> LidNetwork<Real>::head_backward(const std::vector<std::size_t>& layers, const HeadCache& cache,
                                             const Tensor<Real>& grad) {
  Tensor<Real> g = grad;
  for (std::size_t i = layers.size(); i-- > 0;) {
    if (i + 1 < layers.size()) g = nn::relu_backward(cache.pre[i], g);
    auto lg = nn::linear_backward(cache.inputs[i], params_[layers[i]].value, g);
    accumulate(params_[layers[i]].grad, lg.weight);
    accumulate(params_[layers[i] + 1].grad, lg.bias);
    g = std::move(lg.input);
  }
  return g;
}

template <typename Real>
Tensor<Real> LidNetwork<Real>::forward_g(const Tensor<Real>& f, HeadCache* cache) const {
  return head_forward(g_layers_, f, cache);
}

template <typename Real>
Tensor<Real> LidNetwork<Real>::backward_g(const HeadCache& cache, const Tensor<Real>& grad_logits) {
  return head_backward(g_layers_, cache, grad_logits);
}

template <typename Real>
Tensor<Real> LidNetwork<Real>::embedding(const Tensor<Real>& f) const {
  return nn::relu_forward(nn::linear_forward(f, params_[g_layers_[0]].value, params_[g_layers_[0] + 1].value));
}

template <typename Real>
Tensor<Real> LidNetwork<Real>::forward_d(const Tensor<Real>& f, HeadCache* cache) const {
  return head_forward(d_layers_, nn::grl_forward(f), cache);
}

template <typename Real>
Tensor<Real> LidNetwork<Real>::backward_d(const HeadCache& cache, const Tensor<Real>& grad_logits, double lambda) {
  return nn::grl_backward(head_backward(d_layers_, cache, grad_logits), lambda);
}

template class LidNetwork<float>;
template class LidNetwork<double>;

Model build_model(const LidModelConfig& cfg) { return Model(cfg); }

template <typename Real>
Tensor<Real> to_tensor(const features::FeatureSequence& fs) {
  Tensor<Real> t({1, fs.frames, fs.dim});
  for (std::size_t i = 0; i < fs.values.size(); ++i) t[i] = static_cast<Real>(fs.values[i]);
  return t;
}

template <typename Real>
Tensor<Real> stack(const std::vector<const features::FeatureSequence*>& batch) {
  if (batch.empty()) throw InvalidArgument("stack: empty batch");
  const std::size_t t = batch[0]->frames, d = batch[0]->dim;
  Tensor<Real> out({batch.size(), t, d});
  Real* p = out.ptr();
  for (const auto* fs : batch) {
    if (fs->frames != t || fs->dim != d) throw InvalidArgument("stack: sequences differ in shape");
    for (double v : fs->values) *p++ = static_cast<Real>(v);
  }
  return out;
}

template Tensor<float> to_tensor(const features::FeatureSequence&);
template Tensor<double> to_tensor(const features::FeatureSequence&);
template Tensor<float> stack(const std::vector<const features::FeatureSequence*>&);
template Tensor<double> stack(const std::vector<const features::FeatureSequence*>&);

namespace {

std::vector<double> row0(const Tensor<float>& t) { return {t.data().begin(), t.data().end()}; }

Tensor<float> as_row(const std::vector<double>& v) {
  Tensor<float> t({1, v.size()});
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = static_cast<float>(v[i]);
  return t;
}

void check_dim(const Model& model, const features::FeatureSequence& fs) {
  if (fs.dim != model.config().input_dim)
    throw InvalidArgument("feature sequence '" + fs.id + "' has dimension " + std::to_string(fs.dim) +
                          ", model expects " + std::to_string(model.config().input_dim));
}

}  // namespace

std::vector<double> extract_f(const Model& model, const features::FeatureSequence& fs) {
  check_dim(model, fs);
  return row0(model.infer_f(to_tensor<float>(fs)));
}

std::vector<double> classify(const Model& model, const std::vector<double>& f) {
  if (f.size() != model.config().fc_dim) throw InvalidArgument("classify: feature vector has the wrong dimension");
  return row0(nn::softmax(model.forward_g(as_row(f), nullptr)));
}

std::size_t argmax(const std::vector<double>& scores) {
  if (scores.empty()) throw InvalidArgument("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

std::size_t predict(const Model& model, const features::FeatureSequence& fs) {
  return argmax(classify(model, extract_f(model, fs)));
}

std::vector<double> embed(const Model& model, const features::FeatureSequence& fs) {
  check_dim(model, fs);
  return row0(model.embedding(model.infer_f(to_tensor<float>(fs))));
}

std::vector<double> domain_logits(const Model& model, const std::vector<double>& f, double /*lambda*/) {
  if (f.size() != model.config().fc_dim)
    throw InvalidArgument("domain_logits: feature vector has the wrong dimension");
  return row0(nn::softmax(model.forward_d(as_row(f), nullptr)));
}

}  // namespace lid::model
