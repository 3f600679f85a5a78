#include <algorithm>
#include <cmath>
#include <cstring>

#include "lid/common.hpp"
#include "lid/corpus.hpp"

namespace lid::corpus {

namespace {

std::uint32_t get_u32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
         (static_cast<std::uint32_t>(b[off + 2]) << 16) | (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

std::uint16_t get_u16(const std::vector<std::uint8_t>& b, std::size_t off) {
  return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}

std::int16_t to_pcm16(float x) {
  const double v = std::nearbyint(static_cast<double>(x) * 32768.0);
  return static_cast<std::int16_t>(std::clamp(v, -32768.0, 32767.0));
}

}  // namespace

void AudioSegment::validate() const {
  if (samples.empty()) throw InvalidArgument("audio segment '" + id + "' has no samples");
  if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
  for (float s : samples)
    if (!std::isfinite(s) || s < -1.0f || s > 1.0f)
      throw InvalidArgument("audio segment '" + id + "' has samples outside [-1, 1]");
}

void quantize_pcm16(std::vector<float>& samples) {
  for (float& s : samples) s = static_cast<float>(to_pcm16(s)) / 32768.0f;
}

std::vector<std::uint8_t> encode_wav(const AudioSegment& seg) {
  const auto n = static_cast<std::uint32_t>(seg.samples.size());
  std::vector<std::uint8_t> b;
  b.reserve(44 + 2 * static_cast<std::size_t>(n));
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  put_u32(b, 36 + 2 * n);
  b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(b, 16);
  put_u16(b, 1);  // PCM
  put_u16(b, 1);  // mono
  put_u32(b, static_cast<std::uint32_t>(seg.sample_rate));
  put_u32(b, static_cast<std::uint32_t>(seg.sample_rate) * 2);
  put_u16(b, 2);
  put_u16(b, 16);
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  put_u32(b, 2 * n);
  for (float s : seg.samples) put_u16(b, static_cast<std::uint16_t>(to_pcm16(s)));
  return b;
}

void save_wav(const AudioSegment& seg, const std::filesystem::path& path) {
  const auto bytes = encode_wav(seg);
  write_file(path, bytes);
}

AudioSegment decode_wav(const std::vector<std::uint8_t>& b, int expected_rate, std::string id) {
  if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 || std::memcmp(b.data() + 8, "WAVE", 4) != 0)
    throw IoError("not a RIFF/WAVE file");
  std::size_t off = 12;
  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  while (off + 8 <= b.size()) {
    const std::uint32_t size = get_u32(b, off + 4);
    const std::size_t body = off + 8;
    if (body + size > b.size()) throw IoError("truncated WAV chunk");
    if (std::memcmp(b.data() + off, "fmt ", 4) == 0) {
      if (size < 16) throw IoError("malformed fmt chunk");
      const std::uint16_t format = get_u16(b, body);
      channels = get_u16(b, body + 2);
      rate = get_u32(b, body + 4);
      bits = get_u16(b, body + 14);
      bool pcm = format == 1;
      if (format == 0xFFFE && size >= 40) pcm = get_u16(b, body + 24) == 1;  // extensible, PCM subformat
      if (!pcm) throw IoError("compressed or non-PCM WAV unsupported");
      have_fmt = true;
    } else if (std::memcmp(b.data() + off, "data", 4) == 0) {
      if (!have_fmt) throw IoError("data chunk before fmt chunk");
      if (channels != 1) throw IoError("channel count unsupported: " + std::to_string(channels));
      if (bits != 16) throw IoError("sample width unsupported: " + std::to_string(bits) + " bits");
      if (static_cast<int>(rate) != expected_rate)
        throw IoError("sample rate " + std::to_string(rate) + " Hz does not match expected " +
                      std::to_string(expected_rate) + " Hz");
      const std::size_t n = size / 2;
      if (n == 0) throw IoError("empty WAV payload");
      AudioSegment seg;
      seg.sample_rate = expected_rate;
      seg.id = std::move(id);
      seg.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        seg.samples[i] = static_cast<float>(static_cast<std::int16_t>(get_u16(b, body + 2 * i))) / 32768.0f;
      return seg;
    }
    off = body + size + (size & 1u);
  }
  throw IoError(have_fmt ? "WAV has no data chunk" : "WAV has no fmt chunk");
}

AudioSegment load_wav(const std::filesystem::path& path, int expected_rate) {
  try {
    return decode_wav(read_file(path), expected_rate, path.stem().string());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

AudioSegment crop_segment(const AudioSegment& seg, double seconds) {
  if (!(seconds > 0.0)) throw InvalidArgument("crop length must be positive");
  const auto want = static_cast<std::size_t>(std::floor(seconds * seg.sample_rate));
  if (want == 0) throw InvalidArgument("crop length is shorter than one sample");
  AudioSegment out = seg;
  if (seg.samples.size() < want) {
    out.short_flag = true;
    return out;
  }
  out.samples.resize(want);
  return out;
}

}  // namespace lid::corpus
