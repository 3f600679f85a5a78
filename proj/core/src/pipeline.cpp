#include "lid/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "lid/metrics.hpp"

namespace lid::pipeline {

features::FeatureSequence featurize_segment(const corpus::AudioSegment& seg, const features::FeatureConfig& cfg,
                                            bool cmvn) {
  auto fs = features::mfsc(seg, cfg);
  return cmvn ? features::cmvn(fs) : fs;
}

FeaturizeReport featurize_manifest(const corpus::DatasetManifest& audio, const features::FeatureConfig& cfg,
                                   bool cmvn, const std::filesystem::path& out_dir, int workers) {
  cfg.validate();
  const auto& entries = audio.entries;
  std::vector<std::string> errors(entries.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      const auto& e = entries[i];
      try {
        auto seg = corpus::load_wav(audio.resolve(e), cfg.sample_rate);
        seg.id = e.id;
        seg.language = e.language;
        seg.domain = e.domain;
        features::save_features(featurize_segment(seg, cfg, cmvn), out_dir / "feat" / (e.id + ".lidf"));
      } catch (const Error& ex) {
        errors[i] = ex.what();
      }
    }
  };
  const int n = std::max(1, workers);
  std::vector<std::thread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  FeaturizeReport report;
  report.manifest.base_dir = out_dir;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!errors[i].empty()) {
      report.failures.emplace_back(entries[i].id, errors[i]);
      continue;
    }
    auto e = entries[i];
    e.path = "feat/" + e.id + ".lidf";
    report.manifest.entries.push_back(e);
  }
  write_manifest(report.manifest, out_dir / "features.csv");
  return report;
}

std::vector<features::FeatureSequence> load_features(const corpus::DatasetManifest& manifest, corpus::Split split,
                                                     const std::string& domain,
                                                     const std::vector<std::string>& languages) {
  std::vector<features::FeatureSequence> out;
  for (const auto& e : manifest.entries) {
    if (split != corpus::Split::unassigned && e.split != split) continue;
    if (!domain.empty() && e.domain != domain) continue;
    if (!languages.empty() && std::find(languages.begin(), languages.end(), e.language) == languages.end()) continue;
    auto fs = features::load_features(manifest.resolve(e));
    fs.id = e.id;
    fs.language = e.language;
    fs.domain = e.domain;
    out.push_back(std::move(fs));
  }
  return out;
}

analysis::EmbeddingSet collect_embeddings(const model::Model& model,
                                          const std::vector<features::FeatureSequence>& seqs, double seconds,
                                          std::size_t* skipped) {
  analysis::EmbeddingSet es;
  es.segment_seconds = seconds;
  std::size_t n_skipped = 0;
  const std::size_t min_frames = model.config().min_frames();
  for (const auto& fs : seqs) {
    const std::size_t want = seconds > 0 ? std::min(fs.frames, metrics::frames_for_seconds(seconds, fs)) : fs.frames;
    if (want < min_frames) {
      ++n_skipped;
      continue;
    }
    es.items.push_back({fs.id, fs.language, fs.domain, model::embed(model, fs.crop(want))});
  }
  if (skipped) *skipped = n_skipped;
  return es;
}

}  // namespace lid::pipeline
