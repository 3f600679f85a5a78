#include <cstring>

#include "json.hpp"
#include "lid/common.hpp"
#include "lid/features.hpp"

namespace lid::features {

namespace {

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t off) {
  if (off + 4 > b.size()) throw IoError("feature file truncated");
  return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
         (static_cast<std::uint32_t>(b[off + 2]) << 16) | (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

}  // namespace

std::vector<std::uint8_t> encode_features(const FeatureSequence& fs) {
  fs.validate();
  std::vector<std::uint8_t> b{'L', 'I', 'D', 'F'};
  put_u32(b, kFeatureFormatVersion);
  put_u32(b, static_cast<std::uint32_t>(fs.frames));
  put_u32(b, static_cast<std::uint32_t>(fs.dim));
  for (double v : fs.values) {
    const auto f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(b, bits);
  }
  const nlohmann::json meta = {{"id", fs.id},
                               {"language", fs.language},
                               {"domain", fs.domain},
                               {"normalized", fs.normalized},
                               {"frame_hop_s", fs.frame_hop_s},
                               {"frame_len_s", fs.frame_len_s}};
  const std::string text = meta.dump();
  put_u32(b, static_cast<std::uint32_t>(text.size()));
  b.insert(b.end(), text.begin(), text.end());
  return b;
}

FeatureSequence decode_features(std::span<const std::uint8_t> b) {
  if (b.size() < 16 || std::memcmp(b.data(), "LIDF", 4) != 0) throw IoError("not a LIDF feature file");
  const std::uint32_t version = get_u32(b, 4);
  if (version != kFeatureFormatVersion)
    throw IoError("unsupported feature file version " + std::to_string(version));
  FeatureSequence fs;
  fs.frames = get_u32(b, 8);
  fs.dim = get_u32(b, 12);
  const std::size_t count = fs.frames * fs.dim;
  const std::size_t payload_end = 16 + 4 * count;
  if (payload_end + 4 > b.size()) throw IoError("feature file truncated");
  fs.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = get_u32(b, 16 + 4 * i);
    float f;
    std::memcpy(&f, &bits, 4);
    fs.values[i] = f;
  }
  const std::uint32_t meta_len = get_u32(b, payload_end);
  if (payload_end + 4 + meta_len != b.size()) throw IoError("feature file metadata length mismatch");
  try {
    const auto meta = nlohmann::json::parse(b.begin() + static_cast<std::ptrdiff_t>(payload_end + 4), b.end());
    fs.id = meta.at("id").get<std::string>();
    fs.language = meta.at("language").get<std::string>();
    fs.domain = meta.at("domain").get<std::string>();
    fs.normalized = meta.at("normalized").get<bool>();
    fs.frame_hop_s = meta.at("frame_hop_s").get<double>();
    fs.frame_len_s = meta.at("frame_len_s").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad feature metadata: ") + e.what());
  }
  fs.validate();
  return fs;
}

void save_features(const FeatureSequence& fs, const std::filesystem::path& path) {
  write_file(path, encode_features(fs));
}

FeatureSequence load_features(const std::filesystem::path& path) {
  try {
    return decode_features(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace lid::features
