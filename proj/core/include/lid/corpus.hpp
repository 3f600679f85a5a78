#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lid/cluster_tree.hpp"

namespace lid::corpus {

// Mono waveform with labels.  Empty language/domain mean "unset".
struct AudioSegment {
  std::vector<float> samples;
  int sample_rate = 16000;
  std::optional<std::string> language;
  std::string domain;
  std::string id;
  // Set by crop_segment when the segment was shorter than requested.
  bool short_flag = false;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
  // Throws InvalidArgument if samples are empty, non-finite or outside [-1, 1].
  void validate() const;
};

// 16-bit PCM mono RIFF/WAVE only; rate must equal expected_rate.
AudioSegment load_wav(const std::filesystem::path& path, int expected_rate);
// Amplitudes are clamped and rounded to the nearest 1/32768 step.
void save_wav(const AudioSegment& seg, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_wav(const AudioSegment& seg);
AudioSegment decode_wav(const std::vector<std::uint8_t>& bytes, int expected_rate, std::string id);
// Applies the same rounding save_wav would.
void quantize_pcm16(std::vector<float>& samples);

// First floor(seconds * rate) samples; shorter segments are returned whole
// with short_flag set.
AudioSegment crop_segment(const AudioSegment& seg, double seconds);

enum class Split { unassigned, train, validation, evaluation };
std::string to_string(Split s);
Split parse_split(const std::string& s);

struct ManifestEntry {
  std::string id;
  std::string path;  // relative to the manifest's directory unless absolute
  std::string language;
  std::string domain;
  Split split = Split::unassigned;
  double duration_s = 0.0;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const ManifestEntry& e) const;
  // Unique ids, positive durations, and (optionally) existing files.
  void validate(bool check_files) const;
  std::vector<ManifestEntry> select(Split split) const;
  std::vector<std::string> languages() const;
};

// CSV header: id,path,language,domain,split,duration_s
void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double evaluation = 0.1;
};

// Stratified by (language, domain); deterministic in seed.
DatasetManifest split_manifest(const DatasetManifest& manifest, SplitRatios ratios, std::uint64_t seed);

struct ChannelSpec {
  double snr_db = 30.0;
  double tilt_db_per_octave = 0.0;
};

// Parameters of the synthetic corpus.  Every language owns `n_states`
// spectral states (band profiles in dB).  Profiles are inherited down the
// generating tree: the root draws N(0, root_scale_db^2) per band and each
// edge adds N(0, (edge_scale_db * branch length)^2).  Each segment further
// perturbs every state by N(0, speaker_scale_db^2) per band.
struct SynthSpec {
  analysis::ClusterTree generating_tree;
  int n_states = 6;
  int n_bands = 16;
  double root_scale_db = 12.0;
  double edge_scale_db = 4.0;
  double speaker_scale_db = 0.0;
  double state_ms_min = 40.0;
  double state_ms_max = 160.0;
  std::map<std::string, ChannelSpec> domains{{"source", {30.0, 0.0}}, {"target", {5.0, -6.0}}};
  int segments_per_language_per_domain = 100;
  double segment_seconds = 4.0;
  int sample_rate = 16000;
  std::uint64_t seed = 1;

  void validate() const;
  std::vector<std::string> languages() const;
};

// Band profile (dB) of each spectral state, per language: [state][band].
using LanguageProfile = std::vector<std::vector<double>>;
std::map<std::string, LanguageProfile> language_profiles(const SynthSpec& spec);

// The two components of a synthetic segment before mixing and
// normalization: channel-filtered language signal and additive noise.
struct SynthComponents {
  std::vector<double> signal;
  std::vector<double> noise;
};

SynthComponents synth_components(const SynthSpec& spec,
                                 const std::map<std::string, LanguageProfile>& profiles,
                                 const std::string& language, const std::string& domain, int index);
// Mixed, peak-normalized and quantized to the 16-bit grid.
AudioSegment synth_segment(const SynthSpec& spec, const std::map<std::string, LanguageProfile>& profiles,
                           const std::string& language, const std::string& domain, int index);
std::string synth_segment_id(const std::string& language, const std::string& domain, int index);

// Writes every (language, domain, index) segment as WAV under out_dir and
// returns the (unsplit) manifest.  Output is independent of worker count.
DatasetManifest synth_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir, int workers = 1);

}  // namespace lid::corpus
