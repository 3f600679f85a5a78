#pragma once

#include <string>
#include <vector>

#include "lid/features.hpp"
#include "lid/model.hpp"

namespace lid::metrics {

// Rows are true classes, columns predictions.
struct ConfusionMatrix {
  std::size_t k = 0;
  std::vector<long long> counts;  // k * k, row-major
  std::vector<std::string> labels;

  long long at(std::size_t truth, std::size_t pred) const { return counts[truth * k + pred]; }
  long long total() const;
  long long support(std::size_t c) const;    // row sum
  long long predicted(std::size_t c) const;  // column sum
  // False when every count is zero.
  bool usable() const { return total() > 0; }
};

ConfusionMatrix confusion(const std::vector<std::size_t>& preds, const std::vector<std::size_t>& labels,
                          std::size_t k, std::vector<std::string> class_labels = {});

// Mean per-class recall over classes with non-zero support.  Excluded
// classes are appended to `excluded` when given and logged as a warning.
double balanced_accuracy(const ConfusionMatrix& cm, std::vector<std::size_t>* excluded = nullptr);
double accuracy(const ConfusionMatrix& cm);

struct F1Report {
  std::vector<double> f1;
  // Classes with no support and no predictions: F1 is 0 and they are left
  // out of the macro average.
  std::vector<std::size_t> excluded;
  // Classes whose precision + recall is 0 (F1 defined as 0).
  std::vector<std::size_t> zero_division;
  double macro = 0.0;
  double micro = 0.0;
};

F1Report f1_per_class(const ConfusionMatrix& cm);

// (b - a) / a * 100.
double relative_delta(double a, double b);

struct LengthResult {
  std::string domain;
  std::string length;  // "1s", "2s", ..., "full"
  double seconds = 0.0;  // 0 for full
  double balanced_accuracy = 0.0;
  std::size_t used = 0;
  std::size_t too_short = 0;       // below the model's minimum frame count
  std::size_t shorter_than_crop = 0;  // used whole
  ConfusionMatrix cm;
};

// Length label for a crop in seconds; seconds <= 0 means full.
std::string length_label(double seconds);

// Balanced accuracy per (domain, length).  Every sequence must carry a
// language from `languages`; crops take the first frames matching each
// length.  Domains appear in sorted order, lengths in the given order.
std::vector<LengthResult> evaluate_lengths(const model::Model& model,
                                           const std::vector<features::FeatureSequence>& eval,
                                           const std::vector<std::string>& languages,
                                           const std::vector<double>& lengths);

// Frames covered by the first `seconds` of audio for a sequence's framing.
std::size_t frames_for_seconds(double seconds, const features::FeatureSequence& fs);

std::string confusion_csv(const ConfusionMatrix& cm);

}  // namespace lid::metrics
