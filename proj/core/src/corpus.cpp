#include "lid/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <functional>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "lid/common.hpp"
#include "lid/fft.hpp"

namespace lid::corpus {

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::evaluation: return "evaluation";
    case Split::unassigned: return "";
  }
  return "";
}

Split parse_split(const std::string& s) {
  if (s.empty()) return Split::unassigned;
  if (s == "train") return Split::train;
  if (s == "validation") return Split::validation;
  if (s == "evaluation") return Split::evaluation;
  throw InvalidArgument("unknown split '" + s + "'");
}

std::filesystem::path DatasetManifest::resolve(const ManifestEntry& e) const {
  const std::filesystem::path p(e.path);
  return p.is_absolute() ? p : base_dir / p;
}

void DatasetManifest::validate(bool check_files) const {
  std::set<std::string> ids;
  for (const auto& e : entries) {
    if (e.id.empty()) throw InvalidArgument("manifest entry with empty id");
    if (!ids.insert(e.id).second) throw InvalidArgument("duplicate manifest id '" + e.id + "'");
    if (!(e.duration_s > 0.0)) throw InvalidArgument("manifest entry '" + e.id + "' has non-positive duration");
    if (check_files && !std::filesystem::exists(resolve(e)))
      throw IoError("manifest entry '" + e.id + "' references missing file " + resolve(e).string());
  }
}

std::vector<ManifestEntry> DatasetManifest::select(Split split) const {
  std::vector<ManifestEntry> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [&](const ManifestEntry& e) { return e.split == split; });
  return out;
}

std::vector<std::string> DatasetManifest::languages() const {
  std::set<std::string> langs;
  for (const auto& e : entries)
    if (!e.language.empty()) langs.insert(e.language);
  return {langs.begin(), langs.end()};
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "id,path,language,domain,split,duration_s\n";
  for (const auto& e : m.entries) {
    os << csv_escape(e.id) << ',' << csv_escape(e.path) << ',' << csv_escape(e.language) << ','
       << csv_escape(e.domain) << ',' << to_string(e.split) << ',' << format_real(e.duration_s) << '\n';
  }
  write_text(path, os.str());
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  const auto rows = read_csv(path);
  if (rows.empty() || rows[0] != std::vector<std::string>{"id", "path", "language", "domain", "split", "duration_s"})
    throw IoError(path.string() + ": manifest header must be id,path,language,domain,split,duration_s");
  DatasetManifest m;
  m.base_dir = path.parent_path();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 6) throw IoError(path.string() + ": row " + std::to_string(r) + " has wrong field count");
    ManifestEntry e{row[0], row[1], row[2], row[3], parse_split(row[4]), parse_real(row[5])};
    m.entries.push_back(std::move(e));
  }
  m.validate(false);
  return m;
}

DatasetManifest split_manifest(const DatasetManifest& manifest, SplitRatios ratios, std::uint64_t seed) {
  if (!(ratios.train > 0 && ratios.validation > 0 && ratios.evaluation > 0))
    throw InvalidArgument("split ratios must be positive");
  if (std::abs(ratios.train + ratios.validation + ratios.evaluation - 1.0) > 1e-9)
    throw InvalidArgument("ratios must sum to 1");
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i)
    strata[{manifest.entries[i].language, manifest.entries[i].domain}].push_back(i);

  DatasetManifest out = manifest;
  for (auto& [key, idx] : strata) {
    const std::size_t n = idx.size();
    if (n < 3)
      throw InvalidArgument("stratum (" + key.first + ", " + key.second + ") has fewer than 3 entries");
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return manifest.entries[a].id < manifest.entries[b].id; });
    Rng rng(derive_seed(seed, "split/" + key.first + "/" + key.second));
    rng.shuffle(idx);
    const auto count = [n](double r) { return static_cast<std::size_t>(std::floor(static_cast<double>(n) * r + 0.5)); };
    std::size_t n_val = std::max<std::size_t>(1, count(ratios.validation));
    std::size_t n_eval = std::max<std::size_t>(1, count(ratios.evaluation));
    while (n_val + n_eval >= n) (n_val >= n_eval ? n_val : n_eval) -= 1;
    const std::size_t n_train = n - n_val - n_eval;
    for (std::size_t k = 0; k < n; ++k) {
      Split s = k < n_train ? Split::train : (k < n_train + n_val ? Split::validation : Split::evaluation);
      out.entries[idx[k]].split = s;
    }
  }
  return out;
}

void SynthSpec::validate() const {
  if (generating_tree.empty()) throw InvalidArgument("synth: generating tree is empty");
  generating_tree.validate();
  if (generating_tree.leaf_count() < 2) throw InvalidArgument("synth: generating tree needs at least 2 leaves");
  if (n_states < 1 || n_bands < 2) throw InvalidArgument("synth: need n_states >= 1 and n_bands >= 2");
  if (root_scale_db < 0 || edge_scale_db < 0 || speaker_scale_db < 0) throw InvalidArgument("synth: perturbation scales must be >= 0");
  if (!(state_ms_min > 0) || state_ms_max < state_ms_min) throw InvalidArgument("synth: bad state duration range");
  if (segments_per_language_per_domain < 1) throw InvalidArgument("synth: segment count must be >= 1");
  if (!(segment_seconds > 0)) throw InvalidArgument("synth: segment length must be positive");
  if (sample_rate <= 0) throw InvalidArgument("synth: sample rate must be positive");
  if (domains.empty()) throw InvalidArgument("synth: no domains configured");
  for (const auto& [name, ch] : domains)
    if (name.empty() || !std::isfinite(ch.snr_db) || !std::isfinite(ch.tilt_db_per_octave))
      throw InvalidArgument("synth: invalid domain channel '" + name + "'");
}

std::vector<std::string> SynthSpec::languages() const { return generating_tree.leaf_labels(); }

std::map<std::string, LanguageProfile> language_profiles(const SynthSpec& spec) {
  spec.validate();
  const auto& tree = spec.generating_tree;
  const auto states = static_cast<std::size_t>(spec.n_states);
  const auto bands = static_cast<std::size_t>(spec.n_bands);
  std::map<std::string, LanguageProfile> out;

  // Each node's perturbation stream is keyed by its child-index path so the
  // draw does not depend on node numbering.
  std::function<void(int, const LanguageProfile&, const std::string&)> walk =
      [&](int n, const LanguageProfile& parent, const std::string& key) {
        const auto& nd = tree.node(n);
        LanguageProfile prof = parent;
        Rng rng(derive_seed(spec.seed, "profile/" + key));
        const double scale =
            nd.parent < 0 ? spec.root_scale_db : spec.edge_scale_db * (tree.node(nd.parent).height - nd.height);
        for (auto& row : prof)
          for (auto& v : row) v += scale * rng.gaussian();
        if (nd.children.empty()) {
          out[nd.label] = std::move(prof);
          return;
        }
        for (std::size_t c = 0; c < nd.children.size(); ++c)
          walk(nd.children[c], prof, key + "." + std::to_string(c));
      };
  walk(tree.root(), LanguageProfile(states, std::vector<double>(bands, 0.0)), "r");
  return out;
}

std::string synth_segment_id(const std::string& language, const std::string& domain, int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d", index);
  return language + "_" + domain + "_" + buf;
}

namespace {

constexpr std::size_t kSynthFrame = 512;
constexpr std::size_t kSynthHop = kSynthFrame / 2;

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }

// Per-bin dB gain for a band profile: linear interpolation in mel between
// band centers, flat beyond the outermost centers.
std::vector<double> bin_gains_db(const std::vector<double>& profile, int sample_rate, double tilt_db) {
  const std::size_t bins = kSynthFrame / 2 + 1;
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  const auto nb = profile.size();
  std::vector<double> out(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const double f = static_cast<double>(k) * sample_rate / static_cast<double>(kSynthFrame);
    const double pos = hz_to_mel(f) / mel_max * static_cast<double>(nb) - 0.5;
    double g;
    if (pos <= 0.0) {
      g = profile.front();
    } else if (pos >= static_cast<double>(nb - 1)) {
      g = profile.back();
    } else {
      const auto i = static_cast<std::size_t>(pos);
      const double w = pos - static_cast<double>(i);
      g = (1.0 - w) * profile[i] + w * profile[i + 1];
    }
    g += tilt_db * std::log2(std::max(f, 62.5) / 1000.0);
    out[k] = g;
  }
  return out;
}

}  // namespace

SynthComponents synth_components(const SynthSpec& spec, const std::map<std::string, LanguageProfile>& profiles,
                                 const std::string& language, const std::string& domain, int index) {
  const auto pit = profiles.find(language);
  if (pit == profiles.end()) throw InvalidArgument("synth: unknown language '" + language + "'");
  const auto cit = spec.domains.find(domain);
  if (cit == spec.domains.end()) throw InvalidArgument("synth: unknown domain '" + domain + "'");
  const LanguageProfile& prof = pit->second;
  const ChannelSpec& channel = cit->second;

  Rng rng(derive_seed(spec.seed, "segment/" + synth_segment_id(language, domain, index)));
  const auto n = static_cast<std::size_t>(std::llround(spec.segment_seconds * spec.sample_rate));
  const std::size_t padded = n + 2 * kSynthFrame;

  // Piecewise-constant state sequence over the padded timeline.
  std::vector<int> state_at(padded);
  {
    std::size_t t = 0;
    int prev = -1;
    while (t < padded) {
      int s = static_cast<int>(rng.index(static_cast<std::size_t>(spec.n_states)));
      if (spec.n_states > 1 && s == prev) s = (s + 1) % spec.n_states;
      prev = s;
      const double ms = rng.uniform(spec.state_ms_min, spec.state_ms_max);
      const auto len = std::max<std::size_t>(1, static_cast<std::size_t>(ms * 1e-3 * spec.sample_rate));
      for (std::size_t k = 0; k < len && t < padded; ++k) state_at[t++] = s;
    }
  }

  LanguageProfile speaker = prof;
  if (spec.speaker_scale_db > 0.0) {
    Rng srng(derive_seed(spec.seed, "speaker/" + synth_segment_id(language, domain, index)));
    for (auto& row : speaker)
      for (auto& v : row) v += spec.speaker_scale_db * srng.gaussian();
  }
  std::vector<std::vector<double>> gains(static_cast<std::size_t>(spec.n_states));
  for (std::size_t s = 0; s < gains.size(); ++s) {
    gains[s] = bin_gains_db(speaker[s], spec.sample_rate, channel.tilt_db_per_octave);
    for (auto& g : gains[s]) g = std::pow(10.0, g / 20.0);
  }

  std::vector<double> excitation(padded);
  for (auto& e : excitation) e = rng.gaussian();

  // Weighted overlap-add with sqrt-Hann analysis and synthesis windows.
  std::vector<double> window(kSynthFrame);
  for (std::size_t i = 0; i < kSynthFrame; ++i)
    window[i] = std::sqrt(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / kSynthFrame));
  dsp::RealFft fft(kSynthFrame);
  std::vector<double> frame(kSynthFrame), shaped;
  std::vector<std::complex<double>> spectrum;
  std::vector<double> out(padded, 0.0);
  for (std::size_t start = 0; start + kSynthFrame <= padded; start += kSynthHop) {
    for (std::size_t i = 0; i < kSynthFrame; ++i) frame[i] = excitation[start + i] * window[i];
    fft.forward(frame, spectrum);
    const auto& g = gains[static_cast<std::size_t>(state_at[start + kSynthFrame / 2])];
    for (std::size_t k = 0; k < spectrum.size(); ++k) spectrum[k] *= g[k];
    fft.inverse(spectrum, shaped);
    for (std::size_t i = 0; i < kSynthFrame; ++i)
      out[start + i] += shaped[i] * window[i] / static_cast<double>(kSynthFrame);
  }

  SynthComponents c;
  c.signal.assign(out.begin() + kSynthFrame, out.begin() + kSynthFrame + static_cast<std::ptrdiff_t>(n));
  double p_signal = 0.0;
  for (double v : c.signal) p_signal += v * v;
  p_signal /= static_cast<double>(n);

  c.noise.resize(n);
  double p_raw = 0.0;
  for (auto& v : c.noise) {
    v = rng.gaussian();
    p_raw += v * v;
  }
  p_raw /= static_cast<double>(n);
  const double p_target = p_signal / std::pow(10.0, channel.snr_db / 10.0);
  const double scale = p_raw > 0.0 ? std::sqrt(p_target / p_raw) : 0.0;
  for (auto& v : c.noise) v *= scale;
  return c;
}

AudioSegment synth_segment(const SynthSpec& spec, const std::map<std::string, LanguageProfile>& profiles,
                           const std::string& language, const std::string& domain, int index) {
  const auto comp = synth_components(spec, profiles, language, domain, index);
  std::vector<double> mix(comp.signal.size());
  double peak = 0.0;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    mix[i] = comp.signal[i] + comp.noise[i];
    peak = std::max(peak, std::abs(mix[i]));
  }
  const double gain = peak > 0.0 ? 0.5 / peak : 0.0;
  AudioSegment seg;
  seg.sample_rate = spec.sample_rate;
  seg.language = language;
  seg.domain = domain;
  seg.id = synth_segment_id(language, domain, index);
  seg.samples.resize(mix.size());
  for (std::size_t i = 0; i < mix.size(); ++i) seg.samples[i] = static_cast<float>(mix[i] * gain);
  quantize_pcm16(seg.samples);
  return seg;
}

DatasetManifest synth_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir, int workers) {
  spec.validate();
  const auto profiles = language_profiles(spec);
  struct Job {
    std::string language, domain;
    int index;
  };
  std::vector<Job> jobs;
  for (const auto& lang : spec.languages())
    for (const auto& [domain, ch] : spec.domains)
      for (int i = 0; i < spec.segments_per_language_per_domain; ++i) jobs.push_back({lang, domain, i});

  DatasetManifest manifest;
  manifest.base_dir = out_dir;
  manifest.entries.resize(jobs.size());
  std::filesystem::create_directories(out_dir);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    while (true) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      try {
        const Job& job = jobs[j];
        const auto seg = synth_segment(spec, profiles, job.language, job.domain, job.index);
        const std::string rel = "wav/" + job.language + "/" + job.domain + "/" + seg.id + ".wav";
        save_wav(seg, out_dir / rel);
        manifest.entries[j] = ManifestEntry{seg.id, rel, job.language, job.domain, Split::unassigned, seg.duration()};
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  const int n_workers = std::max(1, workers);
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return manifest;
}

}  // namespace lid::corpus
