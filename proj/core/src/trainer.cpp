#include "lid/trainer.hpp"

#include <chrono>
#include <cmath>
#include <map>

#include <spdlog/spdlog.h>

#include "lid/metrics.hpp"

namespace lid::train {

using model::Model;
using nn::Mode;
using nn::Tensor;

std::string to_string(TrainMode m) { return m == TrainMode::baseline ? "baseline" : "adversarial"; }

TrainMode parse_train_mode(const std::string& s) {
  if (s == "baseline") return TrainMode::baseline;
  if (s == "adversarial") return TrainMode::adversarial;
  throw ConfigError("unknown training mode '" + s + "' (expected baseline or adversarial)");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("train: epochs must be >= 1");
  if (batch_size < 2) throw InvalidArgument("train: batch_size must be >= 2");
  if (mode == TrainMode::adversarial && batch_size % 2 != 0)
    throw InvalidArgument("train: adversarial batch_size must be even");
  if (!(grl_lambda >= 0)) throw InvalidArgument("train: grl_lambda must be >= 0");
  if (!(segment_seconds > 0)) throw InvalidArgument("train: segment_seconds must be positive");
  adam.validate();
}

double TrainConfig::lambda_at(double progress) const {
  if (lambda_schedule == LambdaSchedule::constant) return grl_lambda;
  return grl_lambda * (2.0 / (1.0 + std::exp(-10.0 * progress)) - 1.0);
}

std::string TrainConfig::digest() const {
  const std::string text = "mode=" + to_string(mode) + ";epochs=" + std::to_string(epochs) +
                           ";batch=" + std::to_string(batch_size) + ";lr=" + format_real(adam.learning_rate) +
                           ";b1=" + format_real(adam.beta1) + ";b2=" + format_real(adam.beta2) +
                           ";eps=" + format_real(adam.epsilon) +
                           ";schedule=" + (lambda_schedule == LambdaSchedule::ramp ? "ramp" : "constant") +
                           ";lambda=" + format_real(grl_lambda) + ";seconds=" + format_real(segment_seconds) +
                           ";seed=" + std::to_string(seed);
  return hex32(crc32({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()}));
}

std::vector<Batch> make_batches(std::size_t n_source, std::size_t n_target, const TrainConfig& cfg, int epoch) {
  cfg.validate();
  if (n_source == 0) throw InvalidArgument("make_batches: empty source set");
  const bool adv = cfg.mode == TrainMode::adversarial;
  if (adv && n_target == 0) throw InvalidArgument("make_batches: adversarial mode needs target data");
  const std::size_t per = adv ? cfg.batch_size / 2 : cfg.batch_size;

  std::vector<std::size_t> order(n_source);
  for (std::size_t i = 0; i < n_source; ++i) order[i] = i;
  Rng rng(derive_seed(cfg.seed, "source-order:" + std::to_string(epoch)));
  rng.shuffle(order);

  std::vector<Batch> batches(n_source / per);
  for (std::size_t b = 0; b < batches.size(); ++b)
    batches[b].source.assign(order.begin() + static_cast<std::ptrdiff_t>(b * per),
                             order.begin() + static_cast<std::ptrdiff_t>((b + 1) * per));
  if (!adv) return batches;

  std::vector<std::size_t> pool;
  int round = 0;
  std::size_t next = 0;
  for (auto& batch : batches) {
    while (batch.target.size() < per) {
      if (next == pool.size()) {
        pool.resize(n_target);
        for (std::size_t i = 0; i < n_target; ++i) pool[i] = i;
        Rng trng(derive_seed(cfg.seed, "target-order:" + std::to_string(epoch) + ":" + std::to_string(round++)));
        trng.shuffle(pool);
        next = 0;
      }
      batch.target.push_back(pool[next++]);
    }
  }
  return batches;
}

namespace {

Tensor<float> stack_examples(const std::vector<Example>& items) {
  std::vector<const features::FeatureSequence*> seqs;
  for (const auto& e : items) seqs.push_back(e.features);
  return model::stack<float>(seqs);
}

Tensor<float> rows(const Tensor<float>& t, std::size_t begin, std::size_t end) {
  const std::size_t w = t.dim(1);
  Tensor<float> out({end - begin, w});
  std::copy(t.ptr() + begin * w, t.ptr() + end * w, out.ptr());
  return out;
}

Tensor<float> concat_rows(const Tensor<float>& a, const Tensor<float>& b) {
  Tensor<float> out({a.dim(0) + b.dim(0), a.dim(1)});
  std::copy(a.ptr(), a.ptr() + a.size(), out.ptr());
  std::copy(b.ptr(), b.ptr() + b.size(), out.ptr() + a.size());
  return out;
}

}  // namespace

StepResult train_step(Model& model, const std::vector<Example>& source, const std::vector<Example>& target,
                      const TrainConfig& cfg, double lambda) {
  if (source.empty()) throw InvalidArgument("train_step: empty source batch");
  std::vector<int> labels;
  for (const auto& e : source) {
    if (e.label < 0) throw InvalidArgument("train_step: unlabelled source item");
    labels.push_back(e.label);
  }
  const bool adv = cfg.mode == TrainMode::adversarial;
  if (adv && target.empty()) throw InvalidArgument("train_step: adversarial step needs target items");

  StepResult r;
  Model::FeatureCache fc_s, fc_t;
  Model::HeadCache gc, dc;
  const Tensor<float> f_s = model.forward_f(stack_examples(source), Mode::train, &fc_s);
  const auto lang = nn::softmax_xent(model.forward_g(f_s, &gc), labels);
  r.language_loss = lang.loss;
  Tensor<float> grad_f_s = model.backward_g(gc, lang.grad);

  if (adv) {
    const Tensor<float> f_t = model.forward_f(stack_examples(target), Mode::train, &fc_t);
    std::vector<int> domains(source.size(), 0);
    domains.resize(source.size() + target.size(), 1);
    const auto dom = nn::softmax_xent(model.forward_d(concat_rows(f_s, f_t), &dc), domains);
    r.domain_loss = dom.loss;
    const Tensor<float> grad_f = model.backward_d(dc, dom.grad, lambda);
    const Tensor<float> g_s = rows(grad_f, 0, source.size());
    for (std::size_t i = 0; i < grad_f_s.size(); ++i) grad_f_s[i] += g_s[i];
    model.backward_f(fc_s, grad_f_s);
    model.backward_f(fc_t, rows(grad_f, source.size(), grad_f.dim(0)));
  } else {
    model.backward_f(fc_s, grad_f_s);
  }
  nn::adam_step(model.params(), cfg.adam);
  return r;
}

std::string epoch_log_csv(const std::vector<EpochLog>& log) {
  std::string s = "epoch,lang_loss,domain_loss,val_balanced_acc,seconds\n";
  for (const auto& e : log)
    s += std::to_string(e.epoch) + "," + format_real(e.language_loss) + "," +
         (e.domain_loss ? format_real(*e.domain_loss) : "") + "," + format_real(e.val_balanced_accuracy) + "," +
         format_real(std::round(e.seconds * 1000.0) / 1000.0) + "\n";
  return s;
}

double validation_score(const Model& model, const std::vector<features::FeatureSequence>& validation,
                        const std::vector<std::string>& languages, double seconds) {
  const auto res = metrics::evaluate_lengths(model, validation, languages, {seconds});
  // Pool every domain present in the validation set.
  metrics::ConfusionMatrix cm{languages.size(), std::vector<long long>(languages.size() * languages.size(), 0),
                              languages};
  for (const auto& r : res)
    for (std::size_t i = 0; i < cm.counts.size(); ++i) cm.counts[i] += r.cm.counts[i];
  if (!cm.usable()) throw InvalidArgument("validation set has no usable sequences");
  return metrics::balanced_accuracy(cm);
}

namespace {

std::vector<features::FeatureSequence> crop_all(const std::vector<features::FeatureSequence>& in, double seconds,
                                                std::size_t min_frames, const char* what) {
  std::vector<features::FeatureSequence> out;
  std::size_t skipped = 0;
  for (const auto& fs : in) {
    const std::size_t want = metrics::frames_for_seconds(seconds, fs);
    if (fs.frames < want || want < min_frames) {
      ++skipped;
      continue;
    }
    out.push_back(fs.crop(want));
  }
  if (skipped) spdlog::warn("{}: skipped {} sequence(s) shorter than {} s", what, skipped, seconds);
  return out;
}

}  // namespace

TrainResult train(const model::LidModelConfig& model_cfg, const TrainData& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.validation.empty()) throw InvalidArgument("train: validation split is empty");
  if (model_cfg.n_languages != data.languages.size())
    throw InvalidArgument("train: model has " + std::to_string(model_cfg.n_languages) + " outputs for " +
                          std::to_string(data.languages.size()) + " languages");
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < data.languages.size(); ++i) index[data.languages[i]] = static_cast<int>(i);

  Model model(model_cfg);
  const std::size_t min_frames = model_cfg.min_frames();
  const auto source = crop_all(data.source, cfg.segment_seconds, min_frames, "source");
  const bool adv = cfg.mode == TrainMode::adversarial;
  const auto target = adv ? crop_all(data.target, cfg.segment_seconds, min_frames, "target")
                          : std::vector<features::FeatureSequence>{};
  std::vector<Example> src, tgt;
  for (const auto& fs : source) {
    const auto it = index.find(fs.language);
    if (it == index.end()) throw InvalidArgument("train: '" + fs.id + "' has unknown language '" + fs.language + "'");
    src.push_back({&fs, it->second});
  }
  for (const auto& fs : target) tgt.push_back({&fs, -1});
  if (src.empty()) throw InvalidArgument("train: no usable source sequences");

  const std::size_t steps_per_epoch = make_batches(src.size(), tgt.size(), cfg, 0).size();
  if (steps_per_epoch == 0) throw InvalidArgument("train: fewer source sequences than one batch");
  const double total_steps = static_cast<double>(steps_per_epoch) * cfg.epochs;

  TrainResult result{{model, {}}, {}};
  double best = -1.0;
  std::size_t step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochLog log;
    log.epoch = epoch;
    double lang_sum = 0.0, dom_sum = 0.0;
    const auto batches = make_batches(src.size(), tgt.size(), cfg, epoch);
    for (const auto& b : batches) {
      std::vector<Example> bs, bt;
      for (auto i : b.source) bs.push_back(src[i]);
      for (auto i : b.target) bt.push_back(tgt[i]);
      const double lambda = adv ? cfg.lambda_at(static_cast<double>(step) / total_steps) : 0.0;
      log.lambda = lambda;
      const auto r = train_step(model, bs, bt, cfg, lambda);
      lang_sum += r.language_loss;
      dom_sum += r.domain_loss;
      ++step;
    }
    log.language_loss = lang_sum / static_cast<double>(batches.size());
    if (adv) log.domain_loss = dom_sum / static_cast<double>(batches.size());
    log.val_balanced_accuracy = validation_score(model, data.validation, data.languages, cfg.segment_seconds);
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    spdlog::info("epoch {}/{}: lang_loss {:.4f}{} val_bacc {:.4f} ({:.1f}s)", epoch, cfg.epochs, log.language_loss,
                 adv ? fmt::format(" domain_loss {:.4f} lambda {:.3f}", *log.domain_loss, log.lambda) : std::string(),
                 log.val_balanced_accuracy, log.seconds);
    if (log.val_balanced_accuracy > best) {
      best = log.val_balanced_accuracy;
      result.best.model = model;
      result.best.meta.epoch = epoch;
      result.best.meta.validation_metric = best;
    }
    result.log.push_back(log);
  }
  result.best.meta.languages = data.languages;
  result.best.meta.train_digest = cfg.digest();
  result.best.meta.mode = to_string(cfg.mode);
  result.best.meta.seed = cfg.seed;
  return result;
}

}  // namespace lid::train
