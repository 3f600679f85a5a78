#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lid/corpus.hpp"
#include "lid/features.hpp"
#include "lid/model.hpp"
#include "lid/trainer.hpp"

namespace lid {

struct AnalysisOptions {
  // "a,b=ab" groups separated by ';'.
  std::string merge;
  std::vector<std::string> keep;
  int random_pairs = 1000;
};

struct ProjectOptions {
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  // 0 keeps every embedding.
  int per_language = 0;
};

// Everything a pipeline run needs.  Defaults are the desk-scale setup; the
// file format is one `section.key = value` per line with '#' comments.
struct RunConfig {
  std::uint64_t seed = 1;
  corpus::SynthSpec synth;  // synth.seed is derived from `seed`
  int synth_workers = 1;
  corpus::SplitRatios split;
  features::FeatureConfig features;
  bool cmvn = true;
  model::LidModelConfig model;  // n_languages is set from the data
  train::TrainConfig train;     // train.seed is derived from `seed`
  std::string source_domain = "source";
  std::string target_domain = "target";
  // Languages the classifier is trained on; empty means all.
  std::vector<std::string> train_languages;
  std::vector<double> eval_lengths{1.0, 2.0, 3.0, 0.0};  // 0 = full
  double embed_seconds = 5.0;
  AnalysisOptions analysis;
  ProjectOptions project;

  RunConfig();

  // Throws ConfigError on unknown keys or malformed values.
  void set(const std::string& key, const std::string& value);
  // "key=value".
  void apply_override(const std::string& assignment);
  void parse(const std::string& text, const std::string& origin = "<config>");
  // Canonical `key = value` rendering of every key, sorted.
  std::string to_text() const;
  std::vector<std::string> keys() const;

  // Derived seeds for each stage.
  std::uint64_t stage_seed(const std::string& stage) const;
  // Copies with the derived seeds filled in.
  corpus::SynthSpec synth_spec() const;
  model::LidModelConfig model_config(std::size_t n_languages) const;
  train::TrainConfig train_config() const;
};

RunConfig load_run_config(const std::filesystem::path& path);

// The built-in generating tree of the synthetic corpus.
std::string default_generating_tree();

}  // namespace lid
