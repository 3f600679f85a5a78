#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lid/analysis.hpp"
#include "lid/checkpoint.hpp"
#include "lid/config.hpp"
#include "lid/metrics.hpp"

namespace lid::experiment {

// Languages left out of classifier training in the synthetic experiment.
inline const std::vector<std::string> kHeldOut{"L1", "L6"};

// Equator coordinates whose pairwise distances grow with the tree distance
// of the default generating tree (siblings ~111 km, cousins ~0.8-1 Mm,
// across the root >= 2.3 Mm).
analysis::GeoTable synthetic_geo();

struct ModelReport {
  double in_domain = 0.0;     // balanced accuracy, source domain, 3 s
  double cross_domain = 0.0;  // target domain, 3 s
  std::vector<double> cross_f1;
  double cross_f1_std = 0.0;
  std::vector<metrics::LengthResult> lengths;
  double best_val = 0.0;
  double seconds = 0.0;
};

struct Report {
  std::uint64_t seed = 0;
  ModelReport baseline;
  ModelReport adversarial;
  std::string ward_newick;
  double tree_distance = 0.0;
  bool held_out_placed = false;
  double pearson_geo = 0.0;
  double tsne_initial_kl = 0.0;
  double tsne_final_kl = 0.0;
};

// Builds the corpus, features and both models for one global seed under
// `work_dir`, then runs the evaluation and analysis steps.  Features,
// checkpoints, the cosine matrix, the Ward tree and the t-SNE layout are
// left in `work_dir`; the audio is removed.
Report run(const RunConfig& cfg, const std::filesystem::path& work_dir);

// True when the smallest clade holding `leaf` and another leaf has the same
// leaf set in both trees.
bool same_sibling_clade(const analysis::ClusterTree& a, const analysis::ClusterTree& b, const std::string& leaf);

double stddev(const std::vector<double>& v);

}  // namespace lid::experiment
