#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "lid/checkpoint.hpp"
#include "lid/gradcheck.hpp"
#include "lid/model.hpp"
#include "lid/trainer.hpp"

using lid::Rng;
using lid::nn::Mode;
using lid::nn::Tensor;
namespace model = lid::model;
namespace nn = lid::nn;

namespace {

model::LidModelConfig tiny_config(std::uint64_t seed = 3) {
  model::LidModelConfig c;
  c.input_dim = 3;
  c.conv = {{4, 2}, {3, 3}};
  c.fc_dim = 5;
  c.embed_dim = 4;
  c.domain_hidden = {3};
  c.n_languages = 3;
  c.seed = seed;
  return c;
}

lid::features::FeatureSequence random_sequence(Rng& rng, std::size_t frames, std::size_t dim, int lang) {
  lid::features::FeatureSequence fs;
  fs.frames = frames;
  fs.dim = dim;
  fs.values.resize(frames * dim);
  for (auto& v : fs.values) v = rng.gaussian();
  fs.language = "L" + std::to_string(lang);
  fs.id = fs.language + "_" + std::to_string(rng.index(1000000));
  return fs;
}

// Language loss plus domain loss through the GRL-free path, as a function
// of every parameter of the network.
double network_loss(model::LidNetwork<double>& net, const Tensor<double>& x, const std::vector<int>& lang,
                    const std::vector<int>& dom) {
  const auto f = net.forward_f(x, Mode::train, nullptr);
  return nn::softmax_xent(net.forward_g(f, nullptr), lang).loss +
         nn::softmax_xent(net.forward_d(f, nullptr), dom).loss;
}

}  // namespace

TEST_CASE("model config arithmetic") {
  model::LidModelConfig published;
  CHECK(published.min_frames() == 23);
  const auto tiny = tiny_config();
  CHECK(tiny.min_frames() == 4);
  const auto net = model::build_model(tiny);
  CHECK(net.params().element_count() == tiny.parameter_count());
  // conv 4*3*2+4, bn 8, conv 3*4*3+3, bn 6, fc4 5*3+5, fc5 4*5+4, out 3*4+3, dom 3*5+3, dom_out 2*3+2
  CHECK(tiny.parameter_count() == 28 + 8 + 39 + 6 + 20 + 24 + 15 + 18 + 8);
  CHECK(model::format_conv_specs(model::parse_conv_specs("128x5,256x10,512x10")) == "128x5,256x10,512x10");
  CHECK_THROWS_AS(model::parse_conv_specs("128x"), lid::ConfigError);
  auto bad = tiny;
  bad.n_languages = 1;
  CHECK_THROWS_AS(bad.validate(), lid::InvalidArgument);
}

TEST_CASE("parameter initialization is seeded per layer") {
  const auto a = model::build_model(tiny_config(3));
  const auto b = model::build_model(tiny_config(3));
  const auto c = model::build_model(tiny_config(4));
  for (std::size_t i = 0; i < a.params().size(); ++i) CHECK(a.params()[i].value == b.params()[i].value);
  CHECK_FALSE(a.params().get("conv1.weight").value == c.params().get("conv1.weight").value);
  CHECK(a.params().get("bn1.gamma").value[0] == 1.0f);
  CHECK(a.params().get("bn1.beta").value[0] == 0.0f);
  CHECK(a.params().get("fc4.bias").value[0] == 0.0f);
}

TEST_CASE("initial language loss is close to ln K") {
  auto cfg = tiny_config();
  cfg.n_languages = 6;
  auto net = model::build_model(cfg);
  Rng rng(5);
  std::vector<lid::features::FeatureSequence> seqs;
  for (int i = 0; i < 32; ++i) seqs.push_back(random_sequence(rng, 10, 3, i % 6));
  std::vector<const lid::features::FeatureSequence*> ptrs;
  std::vector<int> labels;
  for (int i = 0; i < 32; ++i) {
    ptrs.push_back(&seqs[i]);
    labels.push_back(i % 6);
  }
  const auto f = net.forward_f(model::stack<float>(ptrs), Mode::train, nullptr);
  const double loss = nn::softmax_xent(net.forward_g(f, nullptr), labels).loss;
  CHECK(std::abs(loss - std::log(6.0)) < 0.1);
}

TEST_CASE("whole-network gradients match finite differences") {
  for (int seed = 0; seed < 3; ++seed) {
    auto net = model::LidNetwork<double>(tiny_config(10 + seed));
    Rng rng(20 + seed);
    const auto x = lid::testing::random_tensor({3, 8, 3}, rng);
    const std::vector<int> lang{0, 1, 2}, dom{0, 1, 1};
    typename model::LidNetwork<double>::FeatureCache fc;
    typename model::LidNetwork<double>::HeadCache gc, dc;
    net.params().zero_grad();
    const auto f = net.forward_f(x, Mode::train, &fc);
    const auto gl = nn::softmax_xent(net.forward_g(f, &gc), lang);
    const auto dl = nn::softmax_xent(net.forward_d(f, &dc), dom);
    auto grad_f = net.backward_g(gc, gl.grad);
    // lambda = -1 undoes the reversal, so this is the plain gradient of the summed loss
    const auto grad_d = net.backward_d(dc, dl.grad, -1.0);
    for (std::size_t i = 0; i < grad_f.size(); ++i) grad_f[i] += grad_d[i];
    net.backward_f(fc, grad_f);

    for (auto& p : net.params()) {
      const auto saved = p.value;
      const auto numeric = nn::finite_diff_grad(
          [&](const Tensor<double>& v) {
            p.value = v;
            const double l = network_loss(net, x, lang, dom);
            p.value = saved;
            return l;
          },
          saved);
      INFO(p.name);
      // A bias feeding batchnorm has an exactly zero gradient; the
      // difference quotient is rounding noise there.
      if (p.name.starts_with("conv") && p.name.ends_with(".bias")) {
        for (std::size_t i = 0; i < numeric.size(); ++i) {
          CHECK(std::abs(p.grad[i]) < 1e-9);
          CHECK(std::abs(numeric[i]) < 1e-8);
        }
        continue;
      }
      CHECK(nn::relative_error(p.grad, numeric) < 1e-4);
    }
  }
}

TEST_CASE("domain head backward reverses the gradient into F") {
  auto net = model::LidNetwork<double>(tiny_config());
  Rng rng(8);
  const auto f = lid::testing::random_tensor({4, 5}, rng);
  typename model::LidNetwork<double>::HeadCache c1, c2;
  const auto l1 = nn::softmax_xent(net.forward_d(f, &c1), {0, 0, 1, 1});
  const auto plain = net.backward_d(c1, l1.grad, -1.0);
  net.forward_d(f, &c2);
  const auto reversed = net.backward_d(c2, l1.grad, 0.7);
  for (std::size_t i = 0; i < plain.size(); ++i) CHECK(reversed[i] == -0.7 * plain[i]);
}

TEST_CASE("a lambda = 0 adversarial step equals a baseline step on F and G") {
  for (int seed = 0; seed < 5; ++seed) {
    Rng rng(40 + seed);
    std::vector<lid::features::FeatureSequence> src, tgt;
    for (int i = 0; i < 6; ++i) src.push_back(random_sequence(rng, 9, 3, i % 3));
    for (int i = 0; i < 6; ++i) tgt.push_back(random_sequence(rng, 9, 3, i % 3));
    std::vector<lid::train::Example> es, et;
    for (int i = 0; i < 6; ++i) {
      es.push_back({&src[i], i % 3});
      et.push_back({&tgt[i], -1});
    }
    auto base = model::build_model(tiny_config(50 + seed));
    auto adv = base;
    lid::train::TrainConfig bc;
    bc.mode = lid::train::TrainMode::baseline;
    auto ac = bc;
    ac.mode = lid::train::TrainMode::adversarial;
    for (int step = 0; step < 3; ++step) {
      lid::train::train_step(base, es, {}, bc, 0.0);
      lid::train::train_step(adv, es, et, ac, 0.0);
    }
    for (std::size_t i = 0; i < base.params().size(); ++i) {
      const auto& p = base.params()[i];
      if (p.group == nn::Group::domain) continue;
      INFO(p.name);
      CHECK(p.value == adv.params()[i].value);
    }
  }
}

TEST_CASE("checkpoint round trip is bit exact") {
  auto net = model::build_model(tiny_config());
  Rng rng(9);
  for (auto& p : net.params())
    for (auto& v : p.value.data()) v = static_cast<float>(rng.gaussian());
  net.bn_stats()[0].running_mean[1] = 0.25f;
  model::CheckpointMeta meta{7, 0.8125, {"L0", "L1", "L2"}, "abcd0123", "adversarial", 42};
  const auto bytes = model::encode_checkpoint(net, meta);
  const auto ck = model::decode_checkpoint(bytes);
  CHECK(model::encode_checkpoint(ck.model, ck.meta) == bytes);
  CHECK(ck.meta.epoch == 7);
  CHECK(ck.meta.languages == meta.languages);
  CHECK(ck.meta.mode == "adversarial");
  CHECK(ck.model.config() == net.config());
  CHECK(ck.model.bn_stats()[0].running_mean[1] == 0.25f);

  const auto dir = lid::testing::scratch_dir("checkpoint");
  model::save_checkpoint(net, meta, dir / "m.lidm");
  CHECK(lid::read_file(dir / "m.lidm") == bytes);
}

TEST_CASE("corrupted or truncated checkpoints are rejected") {
  const auto net = model::build_model(tiny_config());
  const auto bytes = model::encode_checkpoint(net, {1, 0.5, {"a", "b", "c"}, "", "baseline", 1});
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x01;
  CHECK_THROWS_WITH_AS(model::decode_checkpoint(flipped), doctest::Contains("checksum"), lid::IoError);
  const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<long>(bytes.size() - 9));
  CHECK_THROWS_AS(model::decode_checkpoint(cut), lid::IoError);
  auto version = bytes;
  version[4] = 9;
  CHECK_THROWS_AS(model::decode_checkpoint(version), lid::IoError);
  CHECK_THROWS_AS(model::load_checkpoint("/nonexistent/x.lidm"), lid::IoError);
}

TEST_CASE("inference helpers reject sequences shorter than the receptive field") {
  const auto net = model::build_model(tiny_config());
  Rng rng(1);
  const auto shortseq = random_sequence(rng, 3, 3, 0);
  CHECK_THROWS_WITH_AS(model::predict(net, shortseq), doctest::Contains("4"), lid::InvalidArgument);
  const auto ok = random_sequence(rng, 4, 3, 0);
  CHECK(model::predict(net, ok) < 3);
  CHECK(model::embed(net, ok).size() == 4);
  CHECK(model::argmax({1.0, 3.0, 3.0}) == 1);
}
