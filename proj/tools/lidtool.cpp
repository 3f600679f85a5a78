// lidtool: command line driver for the language identification pipeline.
//
//   synth      synthetic multi-domain corpus (WAV + split manifest)
//   featurize  MFSC + energy features for every manifest entry
//   train      baseline or domain-adversarial training
//   evaluate   balanced accuracy per domain and crop length, F1 per language
//   embed      fc5 embeddings of a manifest (held-out languages included)
//   analyze    prototypes, cosine distances, Ward tree, geo correlation
//   project    t-SNE projection of embeddings
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "lid/analysis.hpp"
#include "lid/checkpoint.hpp"
#include "lid/config.hpp"
#include "lid/metrics.hpp"
#include "lid/pipeline.hpp"
#include "lid/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* sub, Common& c, bool config_required) {
  auto* opt = sub->add_option("--config", c.config, "run configuration file");
  if (config_required) opt->required();
  sub->add_option("--set", c.overrides, "override a config key (key=value), repeatable");
  sub->add_option("--seed", c.seed, "global seed (overrides the config)");
  sub->add_option("--out", c.out, "output directory")->required();
}

lid::RunConfig load_config(const Common& c) {
  lid::RunConfig cfg = c.config.empty() ? lid::RunConfig{} : lid::load_run_config(c.config);
  for (const auto& o : c.overrides) cfg.apply_override(o);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

// Every output directory gets a run.json with the seed and the effective
// configuration so results can be traced back.
void write_run_json(const fs::path& out, const std::string& command, const lid::RunConfig& cfg, json extra = {}) {
  json j = {{"command", command}, {"seed", cfg.seed}, {"config", cfg.to_text()}};
  for (auto& [k, v] : extra.items()) j[k] = v;
  lid::write_text(out / "run.json", j.dump(2) + "\n");
}

std::string file_digest(const fs::path& p) {
  const auto bytes = lid::read_file(p);
  return lid::hex32(lid::crc32(bytes));
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v * 100.0);
  return buf;
}

lid::corpus::Split parse_split_option(const std::string& s) {
  if (s == "all") return lid::corpus::Split::unassigned;
  return lid::corpus::parse_split(s);
}

int cmd_synth(const Common& c) {
  const auto cfg = load_config(c);
  const fs::path out = c.out;
  const auto spec = cfg.synth_spec();
  spdlog::info("synthesizing {} languages x {} domains x {} segments", spec.languages().size(), spec.domains.size(),
               spec.segments_per_language_per_domain);
  auto manifest = lid::corpus::synth_corpus(spec, out, cfg.synth_workers);
  manifest = lid::corpus::split_manifest(manifest, cfg.split, cfg.stage_seed("split"));
  lid::corpus::write_manifest(manifest, out / "manifest.csv");
  lid::write_text(out / "tree.nwk", lid::analysis::to_newick(spec.generating_tree) + "\n");
  write_run_json(out, "synth", cfg, {{"entries", manifest.entries.size()}});
  spdlog::info("wrote {} entries to {}", manifest.entries.size(), (out / "manifest.csv").string());
  return 0;
}

int cmd_featurize(const Common& c, const std::string& manifest_path, bool no_cmvn) {
  auto cfg = load_config(c);
  if (no_cmvn) cfg.cmvn = false;
  const fs::path out = c.out;
  const auto audio = lid::corpus::read_manifest(manifest_path);
  const auto report = lid::pipeline::featurize_manifest(audio, cfg.features, cfg.cmvn, out, cfg.synth_workers);
  std::string failures = "id,error\n";
  for (const auto& [id, msg] : report.failures) {
    spdlog::error("{}: {}", id, msg);
    failures += lid::csv_escape(id) + "," + lid::csv_escape(msg) + "\n";
  }
  if (!report.failures.empty()) lid::write_text(out / "failures.csv", failures);
  write_run_json(out, "featurize", cfg,
                 {{"manifest", manifest_path},
                  {"features", report.manifest.entries.size()},
                  {"failures", report.failures.size()}});
  spdlog::info("featurized {} of {} entries", report.manifest.entries.size(), audio.entries.size());
  return report.failures.empty() ? 0 : 1;
}

std::vector<std::string> training_languages(const lid::RunConfig& cfg, const lid::corpus::DatasetManifest& m) {
  if (!cfg.train_languages.empty()) return cfg.train_languages;
  std::set<std::string> langs;
  for (const auto& e : m.entries)
    if (e.split == lid::corpus::Split::train && e.domain == cfg.source_domain) langs.insert(e.language);
  return {langs.begin(), langs.end()};
}

int cmd_train(const Common& c, const std::string& manifest_path, const std::string& mode) {
  auto cfg = load_config(c);
  if (!mode.empty()) cfg.train.mode = lid::train::parse_train_mode(mode);
  const fs::path out = c.out;
  const auto manifest = lid::corpus::read_manifest(manifest_path);
  lid::train::TrainData data;
  data.languages = training_languages(cfg, manifest);
  if (data.languages.size() < 2) throw lid::InvalidArgument("training needs at least two languages");
  using lid::corpus::Split;
  data.source = lid::pipeline::load_features(manifest, Split::train, cfg.source_domain, data.languages);
  data.validation = lid::pipeline::load_features(manifest, Split::validation, cfg.source_domain, data.languages);
  if (cfg.train.mode == lid::train::TrainMode::adversarial)
    data.target = lid::pipeline::load_features(manifest, Split::train, cfg.target_domain, data.languages);
  const auto tcfg = cfg.train_config();
  spdlog::info("training {} model on {} source / {} target sequences, {} languages", lid::train::to_string(tcfg.mode),
               data.source.size(), data.target.size(), data.languages.size());
  const auto result = lid::train::train(cfg.model_config(data.languages.size()), data, tcfg);
  const fs::path ck = out / "epoch_best.lidm";
  lid::model::save_checkpoint(result.best.model, result.best.meta, ck);
  lid::write_text(out / "epochs.csv", lid::train::epoch_log_csv(result.log));
  write_run_json(out, "train", cfg,
                 {{"mode", lid::train::to_string(tcfg.mode)},
                  {"best_epoch", result.best.meta.epoch},
                  {"best_val_balanced_acc", result.best.meta.validation_metric},
                  {"languages", data.languages},
                  {"checkpoint_crc32", file_digest(ck)}});
  spdlog::info("best epoch {} (validation balanced accuracy {:.4f}), checkpoint {}", result.best.meta.epoch,
               result.best.meta.validation_metric, ck.string());
  return 0;
}

struct Evaluated {
  std::string name;
  std::vector<lid::metrics::LengthResult> rows;
};

int cmd_evaluate(const Common& c, const std::vector<std::string>& checkpoints, const std::string& manifest_path,
                 const std::string& split, const std::string& lengths, bool per_language_f1) {
  auto cfg = load_config(c);
  if (!lengths.empty()) cfg.set("eval.lengths", lengths);
  if (checkpoints.size() > 2) throw lid::ConfigError("evaluate takes one or two checkpoints");
  const fs::path out = c.out;
  const auto manifest = lid::corpus::read_manifest(manifest_path);

  std::vector<Evaluated> results;
  std::vector<std::string> languages;
  for (const auto& path : checkpoints) {
    const auto ck = lid::model::load_checkpoint(path);
    if (!languages.empty() && languages != ck.meta.languages)
      throw lid::InvalidArgument("checkpoints were trained on different language tables");
    languages = ck.meta.languages;
    const auto eval = lid::pipeline::load_features(manifest, parse_split_option(split), "", languages);
    std::string name = ck.meta.mode.empty() ? fs::path(path).parent_path().filename().string() : ck.meta.mode;
    if (!results.empty() && results.front().name == name) name += "_2";
    results.push_back({name, lid::metrics::evaluate_lengths(ck.model, eval, languages, cfg.eval_lengths)});
  }

  std::string table = "model,domain,length,balanced_acc_pct,used,too_short,shorter_than_crop\n";
  json report = json::object();
  for (const auto& r : results) {
    for (const auto& row : r.rows) {
      table += r.name + "," + row.domain + "," + row.length + "," + pct(row.balanced_accuracy) + "," +
               std::to_string(row.used) + "," + std::to_string(row.too_short) + "," +
               std::to_string(row.shorter_than_crop) + "\n";
      report[r.name][row.domain][row.length] = row.balanced_accuracy;
      lid::write_text(out / "confusion" / (r.name + "_" + row.domain + "_" + row.length + ".csv"),
                      lid::metrics::confusion_csv(row.cm));
      spdlog::info("{} {} {}: balanced accuracy {}%", r.name, row.domain, row.length, pct(row.balanced_accuracy));
    }
  }
  lid::write_text(out / "balanced_accuracy.csv", table);

  if (results.size() == 2) {
    std::string delta = "domain,length," + results[0].name + "_pct," + results[1].name + "_pct,delta_pct\n";
    for (std::size_t i = 0; i < results[0].rows.size(); ++i) {
      const auto& a = results[0].rows[i];
      const auto& b = results[1].rows[i];
      const double a_pct = std::stod(pct(a.balanced_accuracy)), b_pct = std::stod(pct(b.balanced_accuracy));
      char d[32];
      std::snprintf(d, sizeof(d), "%.2f", lid::metrics::relative_delta(a_pct, b_pct));
      delta += a.domain + "," + a.length + "," + pct(a.balanced_accuracy) + "," + pct(b.balanced_accuracy) + "," + d +
               "\n";
    }
    lid::write_text(out / "delta.csv", delta);
  }

  if (per_language_f1) {
    std::string f1 = "model,domain,length,language,f1_pct\n";
    for (const auto& r : results) {
      for (const auto& row : r.rows) {
        if (!row.cm.usable()) continue;
        const auto rep = lid::metrics::f1_per_class(row.cm);
        for (std::size_t k = 0; k < languages.size(); ++k)
          f1 += r.name + "," + row.domain + "," + row.length + "," + languages[k] + "," + pct(rep.f1[k]) + "\n";
        f1 += r.name + "," + row.domain + "," + row.length + ",macro," + pct(rep.macro) + "\n";
        f1 += r.name + "," + row.domain + "," + row.length + ",micro," + pct(rep.micro) + "\n";
      }
    }
    lid::write_text(out / "f1.csv", f1);
  }
  write_run_json(out, "evaluate", cfg, {{"checkpoints", checkpoints}, {"manifest", manifest_path}, {"results", report}});
  return 0;
}

int cmd_embed(const Common& c, const std::string& checkpoint, const std::string& manifest_path,
              const std::string& split, std::optional<double> seconds) {
  auto cfg = load_config(c);
  if (seconds) cfg.embed_seconds = *seconds;
  const fs::path out = c.out;
  const auto ck = lid::model::load_checkpoint(checkpoint);
  const auto manifest = lid::corpus::read_manifest(manifest_path);
  const auto seqs = lid::pipeline::load_features(manifest, parse_split_option(split));
  std::size_t skipped = 0;
  auto es = lid::pipeline::collect_embeddings(ck.model, seqs, cfg.embed_seconds, &skipped);
  es.checkpoint_digest = file_digest(checkpoint);
  if (skipped) spdlog::warn("skipped {} sequence(s) shorter than the model minimum", skipped);
  lid::analysis::write_embeddings(es, out / "embeddings.csv");
  write_run_json(out, "embed", cfg,
                 {{"checkpoint", checkpoint},
                  {"checkpoint_crc32", es.checkpoint_digest},
                  {"seconds", cfg.embed_seconds},
                  {"embeddings", es.items.size()},
                  {"skipped", skipped}});
  spdlog::info("wrote {} embeddings ({} languages)", es.items.size(), es.languages().size());
  return 0;
}

// "a,b=ab" groups separated by ';'.
std::vector<std::pair<std::vector<std::string>, std::string>> parse_merges(const std::vector<std::string>& specs) {
  std::vector<std::pair<std::vector<std::string>, std::string>> out;
  for (const auto& spec : specs) {
    for (const auto& group : lid::split(spec, ';')) {
      if (lid::trim(group).empty()) continue;
      const auto eq = group.find('=');
      if (eq == std::string::npos) throw lid::ConfigError("merge '" + group + "' is not CODE,CODE=NEW");
      std::vector<std::string> members;
      for (const auto& m : lid::split(group.substr(0, eq), ',')) members.push_back(lid::trim(m));
      out.emplace_back(members, lid::trim(group.substr(eq + 1)));
    }
  }
  return out;
}

int cmd_analyze(const Common& c, const std::string& embeddings, const std::string& geo_path,
                const std::vector<std::string>& references, std::vector<std::string> merges,
                const std::string& keep, std::optional<int> random_pairs) {
  auto cfg = load_config(c);
  if (!keep.empty()) cfg.set("analysis.keep", keep);
  if (random_pairs) cfg.analysis.random_pairs = *random_pairs;
  if (merges.empty() && !cfg.analysis.merge.empty()) merges.push_back(cfg.analysis.merge);
  const fs::path out = c.out;
  namespace an = lid::analysis;

  const auto es = an::read_embeddings(embeddings);
  auto ps = an::prototypes(es);
  for (const auto& [group, code] : parse_merges(merges)) ps = an::merge_languages(ps, group, code);
  if (!cfg.analysis.keep.empty()) ps = an::restrict_leaves(ps, cfg.analysis.keep);

  std::string proto = "language";
  for (std::size_t k = 0; k < (ps.vectors.empty() ? 0 : ps.vectors[0].size()); ++k) proto += ",v" + std::to_string(k);
  proto += "\n";
  for (std::size_t i = 0; i < ps.labels.size(); ++i) {
    proto += lid::csv_escape(ps.labels[i]);
    for (double v : ps.vectors[i]) proto += "," + lid::format_real(v);
    proto += "\n";
  }
  lid::write_text(out / "prototypes.csv", proto);

  const auto dm = an::cosine_distance_matrix(ps);
  lid::write_text(out / "cosine.csv", an::distance_csv(dm));
  const auto tree = an::ward_cluster(dm);
  lid::write_text(out / "ward.nwk", an::to_newick(tree) + "\n");
  json report = {{"languages", ps.labels}, {"files", {"prototypes.csv", "cosine.csv", "ward.nwk"}}};

  if (!geo_path.empty()) {
    const auto geo = an::geo_distance_matrix(an::select_geo(an::read_geo_table(geo_path), dm.labels));
    lid::write_text(out / "geo_log10km.csv", an::distance_csv(geo));
    const double r = an::pearson(geo, dm);
    report["pearson_r"] = r;
    report["files"].push_back("geo_log10km.csv");
    spdlog::info("Pearson r (log10 km vs cosine) = {:.4f} over {} pairs", r, dm.upper_triangle().size());
  }

  json distances = json::object();
  for (const auto& ref : references) {
    const auto eq = ref.find('=');
    const std::string name = eq == std::string::npos ? fs::path(ref).stem().string() : ref.substr(0, eq);
    const std::string path = eq == std::string::npos ? ref : ref.substr(eq + 1);
    auto reference = an::parse_newick(lid::read_text(path));
    reference = an::restrict_tree(reference, dm.labels);
    const double d = an::tree_distance(tree, reference);
    distances[name] = d;
    spdlog::info("tree distance to {}: {:.4f}", name, d);
  }
  report["tree_distances"] = distances;

  if (cfg.analysis.random_pairs > 0) {
    const auto rb = an::random_tree_baseline(dm.labels, cfg.analysis.random_pairs, cfg.stage_seed("random-trees"));
    std::string csv = "pair,tree_distance\n";
    for (std::size_t i = 0; i < rb.samples.size(); ++i)
      csv += std::to_string(i) + "," + lid::format_real(rb.samples[i]) + "\n";
    lid::write_text(out / "random_baseline.csv", csv);
    report["random_baseline"] = {{"pairs", rb.samples.size()}, {"mean", rb.mean}, {"stddev", rb.stddev}};
    report["files"].push_back("random_baseline.csv");
    spdlog::info("random tree distance: mean {:.4f}, sd {:.4f} over {} pairs", rb.mean, rb.stddev, rb.samples.size());
  }
  lid::write_text(out / "report.json", report.dump(2) + "\n");
  write_run_json(out, "analyze", cfg, {{"embeddings", embeddings}});
  return 0;
}

int cmd_project(const Common& c, const std::string& embeddings, std::optional<double> perplexity,
                std::optional<int> iters, std::optional<int> per_language) {
  auto cfg = load_config(c);
  if (perplexity) cfg.project.perplexity = *perplexity;
  if (iters) cfg.project.iterations = *iters;
  if (per_language) cfg.project.per_language = *per_language;
  const fs::path out = c.out;
  const auto es = lid::analysis::read_embeddings(embeddings);

  // Optional per-language subsample: the first N items of each language.
  std::vector<const lid::analysis::EmbeddingSet::Item*> items;
  std::map<std::string, int> taken;
  for (const auto& it : es.items)
    if (cfg.project.per_language <= 0 || taken[it.language]++ < cfg.project.per_language) items.push_back(&it);
  std::vector<lid::analysis::Vector> data;
  for (const auto* it : items) data.push_back(it->vector);

  lid::analysis::TsneConfig tc;
  tc.perplexity = cfg.project.perplexity;
  tc.iterations = cfg.project.iterations;
  tc.learning_rate = cfg.project.learning_rate;
  tc.seed = cfg.stage_seed("project");
  const auto res = lid::analysis::tsne(data, tc);
  spdlog::info("t-SNE KL divergence: initial {:.4f}, final {:.4f}", res.initial_kl, res.final_kl);
  std::string csv = "id,language,x,y\n";
  for (std::size_t i = 0; i < items.size(); ++i)
    csv += lid::csv_escape(items[i]->id) + "," + lid::csv_escape(items[i]->language) + "," +
           lid::format_real(res.points[i][0]) + "," + lid::format_real(res.points[i][1]) + "\n";
  lid::write_text(out / "tsne.csv", csv);
  write_run_json(out, "project", cfg,
                 {{"embeddings", embeddings},
                  {"points", items.size()},
                  {"initial_kl", res.initial_kl},
                  {"final_kl", res.final_kl}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spoken language identification toolkit"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error")->capture_default_str();

  Common common;
  std::string manifest, mode, split = "evaluation", lengths, embeddings, geo, keep;
  std::vector<std::string> checkpoints, references, merges;
  std::string checkpoint;
  bool no_cmvn = false, per_language_f1 = false;
  std::optional<double> seconds, perplexity;
  std::optional<int> iters, per_language, random_pairs;

  auto* synth = app.add_subcommand("synth", "generate the synthetic corpus");
  add_common(synth, common, true);

  auto* featurize = app.add_subcommand("featurize", "compute feature files for a manifest");
  add_common(featurize, common, true);
  featurize->add_option("--manifest", manifest, "audio manifest CSV")->required();
  featurize->add_flag("--no-cmvn", no_cmvn, "skip utterance mean/variance normalization");

  auto* train = app.add_subcommand("train", "train a model");
  add_common(train, common, true);
  train->add_option("--manifest", manifest, "feature manifest CSV")->required();
  train->add_option("--mode", mode, "baseline | adversarial")->check(CLI::IsMember({"baseline", "adversarial"}));

  auto* evaluate = app.add_subcommand("evaluate", "balanced accuracy per domain and length");
  add_common(evaluate, common, false);
  evaluate->add_option("--checkpoint", checkpoints, "checkpoint(s); with two, the second is compared to the first")
      ->required();
  evaluate->add_option("--manifest", manifest, "feature manifest CSV")->required();
  evaluate->add_option("--split", split, "split to evaluate (or 'all')")->capture_default_str();
  evaluate->add_option("--lengths", lengths, "crop lengths in seconds, e.g. 1,2,3,full");
  evaluate->add_flag("--per-language-f1", per_language_f1, "also write per-language F1");

  auto* embed = app.add_subcommand("embed", "extract fc5 embeddings");
  add_common(embed, common, false);
  embed->add_option("--checkpoint", checkpoint, "checkpoint")->required();
  embed->add_option("--manifest", manifest, "feature manifest CSV")->required();
  embed->add_option("--split", split, "split to embed (or 'all')")->capture_default_str();
  embed->add_option("--seconds", seconds, "segment length in seconds (default from config: 5)");

  auto* analyze = app.add_subcommand("analyze", "prototype distances, Ward tree, correlations");
  add_common(analyze, common, false);
  analyze->add_option("--embeddings", embeddings, "embeddings CSV")->required();
  analyze->add_option("--geo", geo, "geo table CSV (language,lat,lon)");
  analyze->add_option("--reference-tree", references, "NAME=PATH.nwk reference tree, repeatable");
  analyze->add_option("--merge", merges, "merge languages, e.g. hrv,srp=hbs; repeatable");
  analyze->add_option("--keep", keep, "comma separated languages to keep");
  analyze->add_option("--random-baseline", random_pairs, "number of random tree pairs (0 disables)");

  auto* project = app.add_subcommand("project", "t-SNE projection of embeddings");
  add_common(project, common, false);
  project->add_option("--embeddings", embeddings, "embeddings CSV")->required();
  project->add_option("--perplexity", perplexity, "t-SNE perplexity");
  project->add_option("--iters", iters, "iterations");
  project->add_option("--per-language", per_language, "use at most N embeddings per language");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  auto logger = spdlog::stderr_color_mt("lidtool");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*synth) return cmd_synth(common);
    if (*featurize) return cmd_featurize(common, manifest, no_cmvn);
    if (*train) return cmd_train(common, manifest, mode);
    if (*evaluate) return cmd_evaluate(common, checkpoints, manifest, split, lengths, per_language_f1);
    if (*embed) return cmd_embed(common, checkpoint, manifest, split, seconds);
    if (*analyze) return cmd_analyze(common, embeddings, geo, references, merges, keep, random_pairs);
    if (*project) return cmd_project(common, embeddings, perplexity, iters, per_language);
  } catch (const lid::ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 2;
}
