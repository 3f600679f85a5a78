#include "experiment.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "lid/pipeline.hpp"
#include "lid/trainer.hpp"

namespace lid::experiment {

analysis::GeoTable synthetic_geo() {
  analysis::GeoTable g;
  const std::vector<std::pair<std::string, double>> lon{{"L0", 0},  {"L1", 1},  {"L2", 8},  {"L3", 9},
                                                        {"L4", 30}, {"L5", 31}, {"L6", 38}, {"L7", 39}};
  for (const auto& [l, x] : lon) {
    g.labels.push_back(l);
    g.points.push_back({0.0, x});
  }
  return g;
}

double stddev(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

bool same_sibling_clade(const analysis::ClusterTree& a, const analysis::ClusterTree& b, const std::string& leaf) {
  auto clade = [&](const analysis::ClusterTree& t) {
    for (int n : t.leaf_nodes()) {
      if (t.node(n).label != leaf) continue;
      auto labels = analysis::subtree_labels(t, t.node(n).parent);
      return std::set<std::string>(labels.begin(), labels.end());
    }
    throw InvalidArgument("leaf '" + leaf + "' not in tree");
  };
  return clade(a) == clade(b);
}

namespace {

ModelReport evaluate(const model::Checkpoint& ck, const std::vector<features::FeatureSequence>& eval,
                     const RunConfig& cfg) {
  ModelReport r;
  r.best_val = ck.meta.validation_metric;
  r.lengths = metrics::evaluate_lengths(ck.model, eval, ck.meta.languages, cfg.eval_lengths);
  for (const auto& row : r.lengths) {
    if (row.seconds != cfg.train.segment_seconds) continue;
    if (row.domain == cfg.source_domain) r.in_domain = row.balanced_accuracy;
    if (row.domain == cfg.target_domain) {
      r.cross_domain = row.balanced_accuracy;
      r.cross_f1 = metrics::f1_per_class(row.cm).f1;
      r.cross_f1_std = stddev(r.cross_f1);
    }
  }
  return r;
}

}  // namespace

Report run(const RunConfig& cfg, const std::filesystem::path& work_dir) {
  Report rep;
  rep.seed = cfg.seed;
  std::filesystem::remove_all(work_dir);
  const auto spec = cfg.synth_spec();
  auto audio = corpus::synth_corpus(spec, work_dir / "audio", cfg.synth_workers);
  audio = corpus::split_manifest(audio, cfg.split, cfg.stage_seed("split"));
  const auto feats = pipeline::featurize_manifest(audio, cfg.features, cfg.cmvn, work_dir / "features",
                                                  cfg.synth_workers);
  if (!feats.failures.empty()) throw Error("featurization failed for " + feats.failures.front().first);
  std::filesystem::remove_all(work_dir / "audio");

  std::vector<std::string> languages;
  for (const auto& l : spec.languages())
    if (std::find(kHeldOut.begin(), kHeldOut.end(), l) == kHeldOut.end()) languages.push_back(l);

  train::TrainData data;
  data.languages = languages;
  data.source = pipeline::load_features(feats.manifest, corpus::Split::train, cfg.source_domain, languages);
  data.target = pipeline::load_features(feats.manifest, corpus::Split::train, cfg.target_domain, languages);
  data.validation = pipeline::load_features(feats.manifest, corpus::Split::validation, cfg.source_domain, languages);
  const auto eval = pipeline::load_features(feats.manifest, corpus::Split::evaluation, "", languages);

  const auto mcfg = cfg.model_config(languages.size());
  model::Checkpoint adversarial_ck{model::Model(mcfg), {}};
  for (auto mode : {train::TrainMode::baseline, train::TrainMode::adversarial}) {
    auto tcfg = cfg.train_config();
    tcfg.mode = mode;
    const auto t0 = std::chrono::steady_clock::now();
    auto res = train::train(mcfg, data, tcfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto& out = mode == train::TrainMode::baseline ? rep.baseline : rep.adversarial;
    out = evaluate(res.best, eval, cfg);
    out.seconds = secs;
    model::save_checkpoint(res.best.model, res.best.meta, work_dir / (train::to_string(mode) + ".lidm"));
    if (mode == train::TrainMode::adversarial) adversarial_ck = std::move(res.best);
  }

  const auto all_eval = pipeline::load_features(feats.manifest, corpus::Split::evaluation);
  const auto es = pipeline::collect_embeddings(adversarial_ck.model, all_eval, cfg.embed_seconds);
  const auto ps = analysis::prototypes(es);
  const auto dm = analysis::cosine_distance_matrix(ps);
  const auto ward = analysis::ward_cluster(dm);
  rep.ward_newick = analysis::to_newick(ward);
  rep.tree_distance = analysis::tree_distance(ward, spec.generating_tree);
  rep.held_out_placed = true;
  for (const auto& h : kHeldOut)
    rep.held_out_placed = rep.held_out_placed && same_sibling_clade(ward, spec.generating_tree, h);
  const auto geo = analysis::geo_distance_matrix(analysis::select_geo(synthetic_geo(), dm.labels));
  rep.pearson_geo = analysis::pearson(geo, dm);
  write_text(work_dir / "cosine.csv", analysis::distance_csv(dm));
  write_text(work_dir / "ward.nwk", rep.ward_newick + "\n");

  std::vector<analysis::Vector> points;
  std::map<std::string, int> per_language;
  for (const auto& it : es.items)
    if (cfg.project.per_language == 0 || per_language[it.language]++ < cfg.project.per_language)
      points.push_back(it.vector);
  analysis::TsneConfig tc;
  tc.perplexity = cfg.project.perplexity;
  tc.iterations = cfg.project.iterations;
  tc.learning_rate = cfg.project.learning_rate;
  tc.seed = cfg.stage_seed("project");
  const auto layout = analysis::tsne(points, tc);
  rep.tsne_initial_kl = layout.initial_kl;
  rep.tsne_final_kl = layout.final_kl;
  std::string csv = "x,y\n";
  for (const auto& p : layout.points) csv += format_real(p[0]) + "," + format_real(p[1]) + "\n";
  write_text(work_dir / "tsne.csv", csv);
  return rep;
}

}  // namespace lid::experiment
