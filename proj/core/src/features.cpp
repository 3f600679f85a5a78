#include "lid/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "lid/common.hpp"
#include "lid/fft.hpp"

namespace lid::features {

std::size_t FeatureConfig::frame_samples() const {
  return static_cast<std::size_t>(std::llround(frame_len_ms * 1e-3 * sample_rate));
}

std::size_t FeatureConfig::hop_samples() const {
  return static_cast<std::size_t>(std::llround(frame_hop_ms * 1e-3 * sample_rate));
}

std::size_t FeatureConfig::fft_samples() const {
  if (fft_size > 0) return static_cast<std::size_t>(fft_size);
  std::size_t n = 1;
  while (n < frame_samples()) n <<= 1;
  return n;
}

void FeatureConfig::validate() const {
  if (sample_rate <= 0) throw InvalidArgument("features: sample rate must be positive");
  if (!(frame_len_ms > 0) || !(frame_hop_ms > 0) || frame_hop_ms > frame_len_ms)
    throw InvalidArgument("features: need 0 < hop <= frame length");
  if (frame_samples() < 2 || hop_samples() < 1) throw InvalidArgument("features: frame too short for sample rate");
  if (n_mel < 1) throw InvalidArgument("features: n_mel must be >= 1");
  if (fft_size != 0 && static_cast<std::size_t>(fft_size) < frame_samples())
    throw InvalidArgument("features: fft_size smaller than the frame");
  if (!(log_floor > 0)) throw InvalidArgument("features: log_floor must be positive");
  if (mel_low_hz < 0 || mel_high() <= mel_low_hz || mel_high() > sample_rate / 2.0)
    throw InvalidArgument("features: need 0 <= mel_low < mel_high <= Nyquist");
}

std::size_t frame_count(std::size_t n, const FeatureConfig& cfg) {
  const std::size_t w = cfg.frame_samples();
  if (n < w) return 0;
  return 1 + (n - w) / cfg.hop_samples();
}

std::size_t frames_for_seconds(double seconds, const FeatureConfig& cfg) {
  return frame_count(static_cast<std::size_t>(std::floor(seconds * cfg.sample_rate)), cfg);
}

std::vector<double> FeatureSequence::frame_times() const {
  std::vector<double> t(frames);
  for (std::size_t i = 0; i < frames; ++i) t[i] = static_cast<double>(i) * frame_hop_s;
  return t;
}

FeatureSequence FeatureSequence::crop(std::size_t n) const {
  FeatureSequence out = *this;
  if (n < frames) {
    out.frames = n;
    out.values.resize(n * dim);
  }
  return out;
}

void FeatureSequence::validate() const {
  if (frames < 1 || dim < 1) throw InvalidArgument("feature sequence '" + id + "' is empty");
  if (values.size() != frames * dim) throw InvalidArgument("feature sequence '" + id + "' has inconsistent shape");
  for (double v : values)
    if (!std::isfinite(v)) throw InvalidArgument("feature sequence '" + id + "' has non-finite values");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

std::vector<double> hamming(std::size_t w) {
  std::vector<double> out(w);
  for (std::size_t i = 0; i < w; ++i)
    out[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(w - 1));
  return out;
}

void check_length(const corpus::AudioSegment& seg, const FeatureConfig& cfg) {
  if (seg.sample_rate != cfg.sample_rate)
    throw InvalidArgument("segment '" + seg.id + "' sample rate " + std::to_string(seg.sample_rate) +
                          " differs from feature config " + std::to_string(cfg.sample_rate));
  if (seg.samples.size() < cfg.frame_samples())
    throw InvalidArgument("segment '" + seg.id + "' is shorter than one frame (" +
                          std::to_string(seg.samples.size()) + " < " + std::to_string(cfg.frame_samples()) +
                          " samples)");
}

}  // namespace

std::vector<std::vector<double>> frame_signal(const corpus::AudioSegment& seg, const FeatureConfig& cfg) {
  cfg.validate();
  check_length(seg, cfg);
  const std::size_t w = cfg.frame_samples();
  const std::size_t h = cfg.hop_samples();
  const std::size_t t = frame_count(seg.samples.size(), cfg);
  const auto win = hamming(w);
  std::vector<std::vector<double>> frames(t, std::vector<double>(w));
  for (std::size_t f = 0; f < t; ++f)
    for (std::size_t i = 0; i < w; ++i) frames[f][i] = static_cast<double>(seg.samples[f * h + i]) * win[i];
  return frames;
}

MelFilterbank mel_filterbank(const FeatureConfig& cfg) {
  cfg.validate();
  const std::size_t nfft = cfg.fft_samples();
  MelFilterbank fb;
  fb.n_bins = nfft / 2 + 1;
  const double lo = hz_to_mel(cfg.mel_low_hz);
  const double hi = hz_to_mel(cfg.mel_high());
  const auto n = static_cast<std::size_t>(cfg.n_mel);
  const double step = (hi - lo) / static_cast<double>(n + 1);
  fb.weights.assign(n, std::vector<double>(fb.n_bins, 0.0));
  for (std::size_t m = 0; m < n; ++m) {
    const double left = lo + step * static_cast<double>(m);
    const double center = left + step;
    const double right = center + step;
    fb.centers_hz.push_back(mel_to_hz(center));
    bool any = false;
    for (std::size_t k = 0; k < fb.n_bins; ++k) {
      const double mel = hz_to_mel(static_cast<double>(k) * cfg.sample_rate / static_cast<double>(nfft));
      double wgt = 0.0;
      if (mel > left && mel <= center) {
        wgt = (mel - left) / (center - left);
      } else if (mel > center && mel < right) {
        wgt = (right - mel) / (right - center);
      }
      fb.weights[m][k] = wgt;
      any = any || wgt > 0.0;
    }
    if (!any)
      throw InvalidArgument("mel filter " + std::to_string(m) + " covers no FFT bin; n_mel too large for fft_size " +
                            std::to_string(nfft));
  }
  return fb;
}

FeatureSequence mfsc(const corpus::AudioSegment& seg, const FeatureConfig& cfg) {
  const auto frames = frame_signal(seg, cfg);
  const auto fb = mel_filterbank(cfg);
  const std::size_t nfft = cfg.fft_samples();
  const std::size_t w = cfg.frame_samples();
  const std::size_t h = cfg.hop_samples();
  const double log_floor = std::log(cfg.log_floor);

  FeatureSequence fs;
  fs.frames = frames.size();
  fs.dim = cfg.dim();
  fs.frame_hop_s = static_cast<double>(h) / cfg.sample_rate;
  fs.frame_len_s = static_cast<double>(w) / cfg.sample_rate;
  fs.id = seg.id;
  fs.language = seg.language.value_or("");
  fs.domain = seg.domain;
  fs.values.assign(fs.frames * fs.dim, 0.0);

  dsp::RealFft fft(nfft);
  std::vector<double> padded(nfft, 0.0);
  std::vector<std::complex<double>> spectrum;
  std::vector<double> power(fb.n_bins);
  for (std::size_t t = 0; t < fs.frames; ++t) {
    std::copy(frames[t].begin(), frames[t].end(), padded.begin());
    fft.forward(padded, spectrum);
    for (std::size_t k = 0; k < fb.n_bins; ++k) power[k] = std::norm(spectrum[k]);
    for (std::size_t m = 0; m < fb.weights.size(); ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < fb.n_bins; ++k) e += fb.weights[m][k] * power[k];
      fs.at(t, m) = e > cfg.log_floor ? std::log(e) : log_floor;
    }
    if (cfg.include_energy) {
      double e = 0.0;
      for (std::size_t i = 0; i < w; ++i) {
        const double x = seg.samples[t * h + i];
        e += x * x;
      }
      e /= static_cast<double>(w);
      fs.at(t, fs.dim - 1) = e > cfg.log_floor ? std::log(e) : log_floor;
    }
  }
  return fs;
}

FeatureSequence cmvn(const FeatureSequence& fs) {
  if (fs.frames < 2) throw InvalidArgument("cmvn needs at least 2 frames, sequence '" + fs.id + "' has " +
                                           std::to_string(fs.frames));
  FeatureSequence out = fs;
  const auto n = static_cast<double>(fs.frames);
  for (std::size_t c = 0; c < fs.dim; ++c) {
    double mean = 0.0;
    for (std::size_t t = 0; t < fs.frames; ++t) mean += fs.at(t, c);
    mean /= n;
    double var = 0.0;
    for (std::size_t t = 0; t < fs.frames; ++t) {
      const double d = fs.at(t, c) - mean;
      var += d * d;
    }
    var /= n;
    const double inv = 1.0 / std::sqrt(std::max(var, 1e-8));
    for (std::size_t t = 0; t < fs.frames; ++t) out.at(t, c) = (fs.at(t, c) - mean) * inv;
  }
  out.normalized = true;
  return out;
}

}  // namespace lid::features
