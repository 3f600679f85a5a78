#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lid/analysis.hpp"
#include "lid/corpus.hpp"
#include "lid/features.hpp"
#include "lid/model.hpp"

// Glue between the modules: manifests of audio become manifests of feature
// files, feature files become training sets and embeddings.
namespace lid::pipeline {

features::FeatureSequence featurize_segment(const corpus::AudioSegment& seg, const features::FeatureConfig& cfg,
                                            bool cmvn);

struct FeaturizeReport {
  corpus::DatasetManifest manifest;  // paths point at .lidf files
  std::vector<std::pair<std::string, std::string>> failures;  // id, message
};

// Writes <out_dir>/feat/<id>.lidf for every entry and <out_dir>/features.csv.
// Failing entries are recorded and left out of the returned manifest.
FeaturizeReport featurize_manifest(const corpus::DatasetManifest& audio, const features::FeatureConfig& cfg,
                                   bool cmvn, const std::filesystem::path& out_dir, int workers = 1);

// Loads the feature files of one split (unassigned = every split), filtered
// by domain and language when those are non-empty.  Manifest order.
std::vector<features::FeatureSequence> load_features(const corpus::DatasetManifest& manifest,
                                                     corpus::Split split, const std::string& domain = "",
                                                     const std::vector<std::string>& languages = {});

// Eval-mode fc5 embedding of the first `seconds` of each sequence (0 = full).
// Sequences below the model's minimum length are skipped and counted.
analysis::EmbeddingSet collect_embeddings(const model::Model& model,
                                          const std::vector<features::FeatureSequence>& seqs, double seconds,
                                          std::size_t* skipped = nullptr);

}  // namespace lid::pipeline
