#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lid/checkpoint.hpp"
#include "lid/features.hpp"
#include "lid/model.hpp"

namespace lid::train {

enum class TrainMode { baseline, adversarial };
std::string to_string(TrainMode m);
TrainMode parse_train_mode(const std::string& s);

enum class LambdaSchedule { ramp, constant };

struct TrainConfig {
  TrainMode mode = TrainMode::baseline;
  int epochs = 50;
  std::size_t batch_size = 64;
  nn::AdamConfig adam;
  // ramp: grl_lambda * (2 / (1 + exp(-10 p)) - 1), p = training progress.
  LambdaSchedule lambda_schedule = LambdaSchedule::ramp;
  double grl_lambda = 1.0;
  double segment_seconds = 3.0;
  std::uint64_t seed = 1;

  void validate() const;
  double lambda_at(double progress) const;
  // Hex CRC32 of a canonical text rendering.
  std::string digest() const;
};

// A training item: feature sequence plus language index (-1 if unlabelled).
struct Example {
  const features::FeatureSequence* features = nullptr;
  int label = -1;
};

// Indices into the source and target example lists.  Baseline batches have
// no target part.
struct Batch {
  std::vector<std::size_t> source;
  std::vector<std::size_t> target;
};

// Batches of one epoch.  Source order is reshuffled per epoch; in
// adversarial mode each batch takes batch_size/2 source and batch_size/2
// target items, the target list cycling through fresh permutations.  The
// final partial batch is dropped.
std::vector<Batch> make_batches(std::size_t n_source, std::size_t n_target, const TrainConfig& cfg, int epoch);

struct StepResult {
  double language_loss = 0.0;
  double domain_loss = 0.0;  // 0 in baseline mode
};

// One optimizer step.  `source` items must be labelled and share one
// length; so must `target` items.
StepResult train_step(model::Model& model, const std::vector<Example>& source, const std::vector<Example>& target,
                      const TrainConfig& cfg, double lambda);

struct EpochLog {
  int epoch = 0;
  double language_loss = 0.0;
  std::optional<double> domain_loss;
  double val_balanced_accuracy = 0.0;
  double lambda = 0.0;
  double seconds = 0.0;
};

std::string epoch_log_csv(const std::vector<EpochLog>& log);

struct TrainResult {
  model::Checkpoint best;
  std::vector<EpochLog> log;
};

struct TrainData {
  std::vector<features::FeatureSequence> source;      // labelled training split
  std::vector<features::FeatureSequence> target;      // unlabelled, adversarial only
  std::vector<features::FeatureSequence> validation;  // labelled
  std::vector<std::string> languages;                 // index -> code
};

// Runs exactly cfg.epochs epochs and returns the epoch with the highest
// validation balanced accuracy (earliest on ties).  Sequences are cropped to
// cfg.segment_seconds; shorter training items are skipped.
TrainResult train(const model::LidModelConfig& model_cfg, const TrainData& data, const TrainConfig& cfg);

// Validation balanced accuracy on crops of `seconds`.
double validation_score(const model::Model& model, const std::vector<features::FeatureSequence>& validation,
                        const std::vector<std::string>& languages, double seconds);

}  // namespace lid::train
