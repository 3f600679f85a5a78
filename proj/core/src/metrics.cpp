#include "lid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

namespace lid::metrics {

long long ConfusionMatrix::total() const {
  long long s = 0;
  for (auto c : counts) s += c;
  return s;
}

long long ConfusionMatrix::support(std::size_t c) const {
  long long s = 0;
  for (std::size_t j = 0; j < k; ++j) s += at(c, j);
  return s;
}

long long ConfusionMatrix::predicted(std::size_t c) const {
  long long s = 0;
  for (std::size_t i = 0; i < k; ++i) s += at(i, c);
  return s;
}

ConfusionMatrix confusion(const std::vector<std::size_t>& preds, const std::vector<std::size_t>& labels,
                          std::size_t k, std::vector<std::string> class_labels) {
  if (preds.size() != labels.size())
    throw InvalidArgument("confusion: " + std::to_string(preds.size()) + " predictions for " +
                          std::to_string(labels.size()) + " labels");
  if (k == 0) throw InvalidArgument("confusion: need at least one class");
  if (class_labels.empty())
    for (std::size_t i = 0; i < k; ++i) class_labels.push_back(std::to_string(i));
  if (class_labels.size() != k) throw InvalidArgument("confusion: label count differs from k");
  ConfusionMatrix cm{k, std::vector<long long>(k * k, 0), std::move(class_labels)};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] >= k || labels[i] >= k) throw InvalidArgument("confusion: class index out of range");
    cm.counts[labels[i] * k + preds[i]] += 1;
  }
  return cm;
}

double balanced_accuracy(const ConfusionMatrix& cm, std::vector<std::size_t>* excluded) {
  double sum = 0.0;
  std::size_t used = 0;
  std::vector<std::size_t> skipped;
  for (std::size_t c = 0; c < cm.k; ++c) {
    const long long n = cm.support(c);
    if (n == 0) {
      skipped.push_back(c);
      continue;
    }
    sum += static_cast<double>(cm.at(c, c)) / static_cast<double>(n);
    ++used;
  }
  if (used == 0) throw InvalidArgument("balanced_accuracy: every class has zero support");
  if (!skipped.empty()) {
    spdlog::warn("balanced accuracy: {} class(es) without support excluded", skipped.size());
    if (excluded) excluded->insert(excluded->end(), skipped.begin(), skipped.end());
  }
  return sum / static_cast<double>(used);
}

double accuracy(const ConfusionMatrix& cm) {
  const long long n = cm.total();
  if (n == 0) throw InvalidArgument("accuracy: empty confusion matrix");
  long long diag = 0;
  for (std::size_t c = 0; c < cm.k; ++c) diag += cm.at(c, c);
  return static_cast<double>(diag) / static_cast<double>(n);
}

F1Report f1_per_class(const ConfusionMatrix& cm) {
  if (!cm.usable()) throw InvalidArgument("f1_per_class: empty confusion matrix");
  F1Report r;
  r.f1.assign(cm.k, 0.0);
  double macro = 0.0;
  std::size_t used = 0;
  long long tp_all = 0;
  for (std::size_t c = 0; c < cm.k; ++c) {
    const long long tp = cm.at(c, c), support = cm.support(c), predicted = cm.predicted(c);
    tp_all += tp;
    if (support == 0 && predicted == 0) {
      r.excluded.push_back(c);
      continue;
    }
    const double p = predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    const double rec = support > 0 ? static_cast<double>(tp) / static_cast<double>(support) : 0.0;
    if (p + rec > 0.0) {
      r.f1[c] = 2.0 * p * rec / (p + rec);
    } else {
      r.zero_division.push_back(c);
    }
    macro += r.f1[c];
    ++used;
  }
  r.macro = macro / static_cast<double>(used);
  // Pooled over classes, false positives and false negatives both equal the
  // off-diagonal total, so micro precision = micro recall = accuracy.
  const double n = static_cast<double>(cm.total());
  const double micro_p = static_cast<double>(tp_all) / n;
  r.micro = micro_p;
  return r;
}

double relative_delta(double a, double b) {
  if (a == 0.0) throw InvalidArgument("relative_delta: reference value is zero");
  return (b - a) / a * 100.0;
}

std::string length_label(double seconds) {
  if (seconds <= 0.0) return "full";
  return format_real(seconds) + "s";
}

std::size_t frames_for_seconds(double seconds, const features::FeatureSequence& fs) {
  if (seconds < fs.frame_len_s) return 0;
  return 1 + static_cast<std::size_t>(std::floor((seconds - fs.frame_len_s) / fs.frame_hop_s + 1e-9));
}

std::vector<LengthResult> evaluate_lengths(const model::Model& model,
                                           const std::vector<features::FeatureSequence>& eval,
                                           const std::vector<std::string>& languages,
                                           const std::vector<double>& lengths) {
  if (eval.empty()) throw InvalidArgument("evaluate_lengths: empty evaluation set");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < languages.size(); ++i) index[languages[i]] = i;
  std::set<std::string> domains;
  for (const auto& fs : eval) {
    if (!index.count(fs.language))
      throw InvalidArgument("evaluate_lengths: sequence '" + fs.id + "' has language '" + fs.language +
                            "' unknown to the model");
    domains.insert(fs.domain);
  }
  const std::size_t min_frames = model.config().min_frames();
  std::vector<LengthResult> out;
  for (const auto& domain : domains) {
    for (double seconds : lengths) {
      LengthResult r;
      r.domain = domain;
      r.seconds = seconds > 0 ? seconds : 0.0;
      r.length = length_label(seconds);
      std::vector<std::size_t> preds, truth;
      for (const auto& fs : eval) {
        if (fs.domain != domain) continue;
        std::size_t want = fs.frames;
        if (seconds > 0) {
          want = frames_for_seconds(seconds, fs);
          if (fs.frames < want) {
            ++r.shorter_than_crop;
            want = fs.frames;
          }
        }
        if (want < min_frames) {
          ++r.too_short;
          continue;
        }
        preds.push_back(model::predict(model, fs.crop(want)));
        truth.push_back(index.at(fs.language));
      }
      r.used = preds.size();
      r.cm = confusion(preds, truth, languages.size(), languages);
      r.balanced_accuracy = r.cm.usable() ? balanced_accuracy(r.cm) : 0.0;
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  auto label = [&](std::size_t i) { return i < cm.labels.size() ? csv_escape(cm.labels[i]) : std::to_string(i); };
  std::string s = "true\\pred";
  for (std::size_t j = 0; j < cm.k; ++j) s += "," + label(j);
  s += "\n";
  for (std::size_t i = 0; i < cm.k; ++i) {
    s += label(i);
    for (std::size_t j = 0; j < cm.k; ++j) s += "," + std::to_string(cm.at(i, j));
    s += "\n";
  }
  return s;
}

}  // namespace lid::metrics
