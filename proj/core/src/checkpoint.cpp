#include "lid/checkpoint.hpp"

#include <cstring>

#include "json.hpp"

namespace lid::model {

using nlohmann::json;

namespace {

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t off) {
  if (off + 4 > b.size()) throw IoError("checkpoint truncated");
  return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
         (static_cast<std::uint32_t>(b[off + 2]) << 16) | (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

json config_to_json(const LidModelConfig& c) {
  return {{"input_dim", c.input_dim},     {"conv", format_conv_specs(c.conv)},
          {"fc_dim", c.fc_dim},           {"embed_dim", c.embed_dim},
          {"domain_hidden", c.domain_hidden}, {"n_languages", c.n_languages},
          {"n_domains", c.n_domains},     {"seed", c.seed}};
}

LidModelConfig config_from_json(const json& j) {
  LidModelConfig c;
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.conv = parse_conv_specs(j.at("conv").get<std::string>());
  c.fc_dim = j.at("fc_dim").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.domain_hidden = j.at("domain_hidden").get<std::vector<std::size_t>>();
  c.n_languages = j.at("n_languages").get<std::size_t>();
  c.n_domains = j.at("n_domains").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

// Every tensor that defines the model: parameters, then running statistics.
std::vector<std::pair<std::string, const Tensor<float>*>> tensors(const Model& m) {
  std::vector<std::pair<std::string, const Tensor<float>*>> out;
  for (const auto& p : m.params()) out.emplace_back(p.name, &p.value);
  for (std::size_t i = 0; i < m.bn_stats().size(); ++i) {
    const std::string n = "bn" + std::to_string(i + 1);
    out.emplace_back(n + ".running_mean", &m.bn_stats()[i].running_mean);
    out.emplace_back(n + ".running_var", &m.bn_stats()[i].running_var);
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Model& model, const CheckpointMeta& meta) {
  if (meta.languages.size() != model.config().n_languages)
    throw InvalidArgument("checkpoint: language table has " + std::to_string(meta.languages.size()) +
                          " entries, model has " + std::to_string(model.config().n_languages) + " outputs");
  json table = json::array();
  std::size_t offset = 0;
  const auto list = tensors(model);
  for (const auto& [name, t] : list) {
    table.push_back({{"name", name}, {"shape", t->shape()}, {"offset", offset}});
    offset += t->size();
  }
  const json header = {{"config", config_to_json(model.config())},
                       {"languages", meta.languages},
                       {"meta",
                        {{"epoch", meta.epoch},
                         {"validation_metric", meta.validation_metric},
                         {"train_digest", meta.train_digest},
                         {"mode", meta.mode},
                         {"seed", meta.seed}}},
                       {"tensors", table}};
  const std::string text = header.dump();
  std::vector<std::uint8_t> b{'L', 'I', 'D', 'M'};
  put_u32(b, kCheckpointVersion);
  put_u32(b, static_cast<std::uint32_t>(text.size()));
  b.insert(b.end(), text.begin(), text.end());
  b.reserve(b.size() + 4 * offset + 4);
  for (const auto& entry : list) {
    for (float v : entry.second->data()) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      put_u32(b, bits);
    }
  }
  put_u32(b, crc32(b));
  return b;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> b) {
  if (b.size() < 16 || std::memcmp(b.data(), "LIDM", 4) != 0) throw IoError("not a LIDM checkpoint");
  const std::uint32_t version = get_u32(b, 4);
  if (version != kCheckpointVersion)
    throw IoError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                  std::to_string(kCheckpointVersion) + ")");
  const std::uint32_t stored = get_u32(b, b.size() - 4);
  if (crc32(b.first(b.size() - 4)) != stored) throw IoError("checkpoint checksum mismatch (file corrupted)");
  const std::size_t header_len = get_u32(b, 8);
  if (12 + header_len > b.size() - 4) throw IoError("checkpoint truncated");

  json header;
  try {
    header = json::parse(b.begin() + 12, b.begin() + 12 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint header: ") + e.what());
  }
  try {
    Checkpoint ck{Model(config_from_json(header.at("config"))), {}};
    ck.meta.languages = header.at("languages").get<std::vector<std::string>>();
    const auto& m = header.at("meta");
    ck.meta.epoch = m.at("epoch").get<int>();
    ck.meta.validation_metric = m.at("validation_metric").get<double>();
    ck.meta.train_digest = m.at("train_digest").get<std::string>();
    ck.meta.mode = m.at("mode").get<std::string>();
    ck.meta.seed = m.at("seed").get<std::uint64_t>();
    if (ck.meta.languages.size() != ck.model.config().n_languages)
      throw IoError("checkpoint language table does not match the output layer");

    const std::size_t payload = 12 + header_len;
    const std::size_t n_floats = (b.size() - 4 - payload) / 4;
    if ((b.size() - 4 - payload) % 4 != 0) throw IoError("checkpoint payload is not a whole number of floats");
    auto list = tensors(ck.model);
    const auto& table = header.at("tensors");
    if (table.size() != list.size()) throw IoError("checkpoint tensor table does not match the model");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& e = table[i];
      auto* t = const_cast<Tensor<float>*>(list[i].second);
      if (e.at("name").get<std::string>() != list[i].first ||
          e.at("shape").get<std::vector<std::size_t>>() != t->shape())
        throw IoError("checkpoint tensor '" + list[i].first + "' does not match the model");
      const std::size_t off = e.at("offset").get<std::size_t>();
      if (off + t->size() > n_floats) throw IoError("checkpoint tensor '" + list[i].first + "' out of range");
      for (std::size_t k = 0; k < t->size(); ++k) {
        const std::uint32_t bits = get_u32(b, payload + 4 * (off + k));
        std::memcpy(&(*t)[k], &bits, 4);
      }
    }
    return ck;
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint header: ") + e.what());
  }
}

void save_checkpoint(const Model& model, const CheckpointMeta& meta, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(model, meta));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return decode_checkpoint(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace lid::model
