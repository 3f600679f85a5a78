#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lid/corpus.hpp"

namespace lid::features {

struct FeatureConfig {
  int sample_rate = 16000;
  double frame_len_ms = 25.0;
  double frame_hop_ms = 10.0;
  int n_mel = 12;
  bool include_energy = true;
  int fft_size = 0;  // 0: next power of two >= frame length
  double log_floor = 1e-10;
  double mel_low_hz = 0.0;
  double mel_high_hz = 0.0;  // 0: Nyquist

  std::size_t frame_samples() const;
  std::size_t hop_samples() const;
  std::size_t fft_samples() const;
  double mel_high() const { return mel_high_hz > 0.0 ? mel_high_hz : sample_rate / 2.0; }
  std::size_t dim() const { return static_cast<std::size_t>(n_mel) + (include_energy ? 1 : 0); }
  void validate() const;
};

// 1 + floor((n - W) / H), or 0 when n < W.
std::size_t frame_count(std::size_t n_samples, const FeatureConfig& cfg);
// Frames produced by a crop of `seconds` of audio.
std::size_t frames_for_seconds(double seconds, const FeatureConfig& cfg);

// T x dim feature matrix, row-major.
struct FeatureSequence {
  std::vector<double> values;
  std::size_t frames = 0;
  std::size_t dim = 0;
  double frame_hop_s = 0.01;
  double frame_len_s = 0.025;
  bool normalized = false;
  std::string id;
  std::string language;
  std::string domain;

  double at(std::size_t t, std::size_t c) const { return values[t * dim + c]; }
  double& at(std::size_t t, std::size_t c) { return values[t * dim + c]; }
  std::span<const double> row(std::size_t t) const { return {values.data() + t * dim, dim}; }
  std::vector<double> frame_times() const;
  // First `frames` rows; sequences that are already shorter are returned whole.
  FeatureSequence crop(std::size_t frames) const;
  void validate() const;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Hamming-windowed frames of the segment.
std::vector<std::vector<double>> frame_signal(const corpus::AudioSegment& seg, const FeatureConfig& cfg);

struct MelFilterbank {
  std::size_t n_bins = 0;               // fft_size / 2 + 1
  std::vector<std::vector<double>> weights;  // n_mel x n_bins
  std::vector<double> centers_hz;
};

// Triangles in the mel domain with centers equally spaced between
// mel_low and mel_high.
MelFilterbank mel_filterbank(const FeatureConfig& cfg);

// Log mel filterbank energies plus log mean frame energy; not normalized.
FeatureSequence mfsc(const corpus::AudioSegment& seg, const FeatureConfig& cfg);

// Utterance-level mean and (population) variance normalization.  Variance
// is floored at 1e-8, so constant columns become zeros.  Re-applying it to a
// normalized sequence is a no-op up to rounding.
FeatureSequence cmvn(const FeatureSequence& fs);

// Feature file: "LIDF", u32 version, u32 T, u32 dim, T*dim float32, u32
// metadata length, metadata JSON.  All little-endian.
std::vector<std::uint8_t> encode_features(const FeatureSequence& fs);
FeatureSequence decode_features(std::span<const std::uint8_t> bytes);
void save_features(const FeatureSequence& fs, const std::filesystem::path& path);
FeatureSequence load_features(const std::filesystem::path& path);

inline constexpr std::uint32_t kFeatureFormatVersion = 1;

}  // namespace lid::features
