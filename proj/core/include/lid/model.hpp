#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lid/features.hpp"
#include "lid/layers.hpp"
#include "lid/params.hpp"

namespace lid::model {

using nn::Mode;
using nn::Tensor;

struct ConvSpec {
  std::size_t filters = 0;
  std::size_t width = 0;
  bool operator==(const ConvSpec&) const = default;
};

// Defaults are the full-size architecture; desk-scale runs shrink the
// widths through the run config.
struct LidModelConfig {
  std::size_t input_dim = 13;
  std::vector<ConvSpec> conv{{128, 5}, {256, 10}, {512, 10}};
  std::size_t fc_dim = 512;     // fc4, last layer of F
  std::size_t embed_dim = 512;  // fc5, first layer of G
  std::vector<std::size_t> domain_hidden{1024, 1024};
  std::size_t n_languages = 6;
  std::size_t n_domains = 2;
  std::uint64_t seed = 1;

  void validate() const;
  // Smallest input length (frames) the valid convolution stack accepts.
  std::size_t min_frames() const;
  // Closed-form count of trainable scalars.
  std::size_t parameter_count() const;
  bool operator==(const LidModelConfig&) const = default;
};

// Parses "128x5,256x10,512x10".
std::vector<ConvSpec> parse_conv_specs(const std::string& text);
std::string format_conv_specs(const std::vector<ConvSpec>& specs);

// F: conv -> batchnorm -> relu (per conv layer), max over time, fc4 + relu.
// G: fc5 + relu, output layer.  D: (GRL) hidden layers with relu, output.
template <typename Real>
class LidNetwork {
 public:
  explicit LidNetwork(const LidModelConfig& cfg);

  const LidModelConfig& config() const { return cfg_; }
  nn::ParamSet<Real>& params() { return params_; }
  const nn::ParamSet<Real>& params() const { return params_; }
  std::vector<nn::BatchNormStats<Real>>& bn_stats() { return bn_; }
  const std::vector<nn::BatchNormStats<Real>>& bn_stats() const { return bn_; }

  struct FeatureCache {
    std::vector<Tensor<Real>> conv_in;
    std::vector<nn::BatchNormCache<Real>> bn;
    std::vector<Tensor<Real>> bn_out;
    std::vector<std::uint32_t> argmax;
    std::size_t pooled_steps = 0;
    Tensor<Real> pooled;
    Tensor<Real> fc_pre;
  };
  struct HeadCache {
    std::vector<Tensor<Real>> inputs;  // input of every linear layer
    std::vector<Tensor<Real>> pre;     // pre-activation of every hidden layer
  };

  // x: [B, T, input_dim] -> f: [B, fc_dim].  Train mode updates running stats.
  Tensor<Real> forward_f(const Tensor<Real>& x, Mode mode, FeatureCache* cache);
  // Eval-mode forward; leaves the running statistics untouched.
  Tensor<Real> infer_f(const Tensor<Real>& x) const;
  // Accumulates parameter gradients of F.
  void backward_f(const FeatureCache& cache, const Tensor<Real>& grad_f);

  // f -> language logits [B, n_languages].
  Tensor<Real> forward_g(const Tensor<Real>& f, HeadCache* cache) const;
  // Accumulates G gradients, returns dL/df.
  Tensor<Real> backward_g(const HeadCache& cache, const Tensor<Real>& grad_logits);
  // Post-relu fc5 activations [B, embed_dim].
  Tensor<Real> embedding(const Tensor<Real>& f) const;

  // f -> GRL -> domain logits [B, n_domains].
  Tensor<Real> forward_d(const Tensor<Real>& f, HeadCache* cache) const;
  // Accumulates D gradients (un-reversed) and returns -lambda * dL/df.
  Tensor<Real> backward_d(const HeadCache& cache, const Tensor<Real>& grad_logits, double lambda);

 private:
  Tensor<Real> head_forward(const std::vector<std::size_t>& layers, const Tensor<Real>& x, HeadCache* cache) const;
  Tensor<Real> head_backward(const std::vector<std::size_t>& layers, const HeadCache& cache,
                             const Tensor<Real>& grad);

  LidModelConfig cfg_;
  nn::ParamSet<Real> params_;
  std::vector<nn::BatchNormStats<Real>> bn_;
  // Parameter indices: weight of layer i at idx[i], bias at idx[i] + 1.
  std::vector<std::size_t> conv_, bn_param_;
  std::size_t fc4_ = 0;
  std::vector<std::size_t> g_layers_, d_layers_;
};

using Model = LidNetwork<float>;

Model build_model(const LidModelConfig& cfg);

// Single-utterance inference helpers (eval-mode batchnorm).  Sequences
// shorter than min_frames() are rejected with the bound in the message.
std::vector<double> extract_f(const Model& model, const features::FeatureSequence& fs);
std::vector<double> classify(const Model& model, const std::vector<double>& f);
// Smallest index wins ties.
std::size_t argmax(const std::vector<double>& scores);
std::size_t predict(const Model& model, const features::FeatureSequence& fs);
std::vector<double> embed(const Model& model, const features::FeatureSequence& fs);
std::vector<double> domain_logits(const Model& model, const std::vector<double>& f, double lambda);

// [1, T, dim] tensor of a feature sequence.
template <typename Real>
Tensor<Real> to_tensor(const features::FeatureSequence& fs);
// Stacks equally long sequences into [B, T, dim].
template <typename Real>
Tensor<Real> stack(const std::vector<const features::FeatureSequence*>& batch);

}  // namespace lid::model
