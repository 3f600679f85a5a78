#include "lid/config.hpp"

#include <algorithm>
#include <functional>
#include <map>

namespace lid {

std::string default_generating_tree() {
  return "(((L0:1,L1:1):1.5,(L2:1,L3:1):1.5):2,((L4:1,L5:1):1.5,(L6:1,L7:1):1.5):2);";
}

namespace {

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected a boolean, got '" + v + "'");
}

std::vector<std::string> parse_list(const std::string& v) {
  std::vector<std::string> out;
  if (trim(v).empty()) return out;
  for (const auto& s : split(v, ',')) out.push_back(trim(s));
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
  return s;
}

template <typename T>
T parse_number(const std::string& v) {
  if constexpr (std::is_floating_point_v<T>) {
    return static_cast<T>(parse_real(v));
  } else {
    const long long x = parse_int(v);
    if constexpr (std::is_unsigned_v<T>) {
      if (x < 0) throw ConfigError("expected a non-negative integer, got '" + v + "'");
    }
    return static_cast<T>(x);
  }
}

template <typename T>
std::string show(const T& v) {
  if constexpr (std::is_floating_point_v<T>) {
    return format_real(v);
  } else {
    return std::to_string(v);
  }
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field number(T RunConfig::*member) {
  return {[member](RunConfig& c, const std::string& v) { c.*member = parse_number<T>(v); },
          [member](const RunConfig& c) { return show(c.*member); }};
}

template <typename S, typename T>
Field nested(S RunConfig::*outer, T S::*inner) {
  return {[=](RunConfig& c, const std::string& v) { (c.*outer).*inner = parse_number<T>(v); },
          [=](const RunConfig& c) { return show((c.*outer).*inner); }};
}

std::string format_lengths(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ",") + (x > 0 ? format_real(x) : std::string("full"));
  return s;
}

std::string format_domains(const std::map<std::string, corpus::ChannelSpec>& d) {
  std::string s;
  for (const auto& [name, ch] : d)
    s += (s.empty() ? "" : ",") + name + ":" + format_real(ch.snr_db) + ":" + format_real(ch.tilt_db_per_octave);
  return s;
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["seed"] = number(&RunConfig::seed);
    t["synth.tree"] = {[](RunConfig& c, const std::string& v) { c.synth.generating_tree = analysis::parse_newick(v); },
                       [](const RunConfig& c) { return analysis::to_newick(c.synth.generating_tree); }};
    t["synth.n_states"] = nested(&RunConfig::synth, &corpus::SynthSpec::n_states);
    t["synth.n_bands"] = nested(&RunConfig::synth, &corpus::SynthSpec::n_bands);
    t["synth.root_scale_db"] = nested(&RunConfig::synth, &corpus::SynthSpec::root_scale_db);
    t["synth.edge_scale_db"] = nested(&RunConfig::synth, &corpus::SynthSpec::edge_scale_db);
    t["synth.speaker_scale_db"] = nested(&RunConfig::synth, &corpus::SynthSpec::speaker_scale_db);
    t["synth.state_ms_min"] = nested(&RunConfig::synth, &corpus::SynthSpec::state_ms_min);
    t["synth.state_ms_max"] = nested(&RunConfig::synth, &corpus::SynthSpec::state_ms_max);
    t["synth.segments"] = nested(&RunConfig::synth, &corpus::SynthSpec::segments_per_language_per_domain);
    t["synth.segment_seconds"] = nested(&RunConfig::synth, &corpus::SynthSpec::segment_seconds);
    t["synth.sample_rate"] = nested(&RunConfig::synth, &corpus::SynthSpec::sample_rate);
    t["synth.workers"] = number(&RunConfig::synth_workers);
    t["synth.domains"] = {[](RunConfig& c, const std::string& v) {
                            std::map<std::string, corpus::ChannelSpec> d;
                            for (const auto& item : parse_list(v)) {
                              const auto parts = split(item, ':');
                              if (parts.size() != 3)
                                throw ConfigError("domain '" + item + "' is not NAME:SNR_DB:TILT_DB_PER_OCTAVE");
                              d[trim(parts[0])] = {parse_real(parts[1]), parse_real(parts[2])};
                            }
                            c.synth.domains = d;
                          },
                          [](const RunConfig& c) { return format_domains(c.synth.domains); }};
    t["split.train"] = nested(&RunConfig::split, &corpus::SplitRatios::train);
    t["split.validation"] = nested(&RunConfig::split, &corpus::SplitRatios::validation);
    t["split.evaluation"] = nested(&RunConfig::split, &corpus::SplitRatios::evaluation);
    t["features.frame_len_ms"] = nested(&RunConfig::features, &features::FeatureConfig::frame_len_ms);
    t["features.frame_hop_ms"] = nested(&RunConfig::features, &features::FeatureConfig::frame_hop_ms);
    t["features.n_mel"] = nested(&RunConfig::features, &features::FeatureConfig::n_mel);
    t["features.fft_size"] = nested(&RunConfig::features, &features::FeatureConfig::fft_size);
    t["features.log_floor"] = nested(&RunConfig::features, &features::FeatureConfig::log_floor);
    t["features.mel_low_hz"] = nested(&RunConfig::features, &features::FeatureConfig::mel_low_hz);
    t["features.mel_high_hz"] = nested(&RunConfig::features, &features::FeatureConfig::mel_high_hz);
    t["features.include_energy"] = {
        [](RunConfig& c, const std::string& v) { c.features.include_energy = parse_bool(v); },
        [](const RunConfig& c) { return std::string(c.features.include_energy ? "true" : "false"); }};
    t["features.cmvn"] = {[](RunConfig& c, const std::string& v) { c.cmvn = parse_bool(v); },
                          [](const RunConfig& c) { return std::string(c.cmvn ? "true" : "false"); }};
    t["model.conv"] = {[](RunConfig& c, const std::string& v) { c.model.conv = model::parse_conv_specs(v); },
                       [](const RunConfig& c) { return model::format_conv_specs(c.model.conv); }};
    t["model.fc_dim"] = nested(&RunConfig::model, &model::LidModelConfig::fc_dim);
    t["model.embed_dim"] = nested(&RunConfig::model, &model::LidModelConfig::embed_dim);
    t["model.domain_hidden"] = {[](RunConfig& c, const std::string& v) {
                                  c.model.domain_hidden.clear();
                                  for (const auto& x : parse_list(v))
                                    c.model.domain_hidden.push_back(parse_number<std::size_t>(x));
                                },
                                [](const RunConfig& c) {
                                  std::string s;
                                  for (auto h : c.model.domain_hidden) s += (s.empty() ? "" : ",") + std::to_string(h);
                                  return s;
                                }};
    t["train.mode"] = {[](RunConfig& c, const std::string& v) { c.train.mode = train::parse_train_mode(v); },
                       [](const RunConfig& c) { return train::to_string(c.train.mode); }};
    t["train.epochs"] = nested(&RunConfig::train, &train::TrainConfig::epochs);
    t["train.batch_size"] = nested(&RunConfig::train, &train::TrainConfig::batch_size);
    t["train.learning_rate"] = {
        [](RunConfig& c, const std::string& v) { c.train.adam.learning_rate = parse_real(v); },
        [](const RunConfig& c) { return format_real(c.train.adam.learning_rate); }};
    t["train.beta1"] = {[](RunConfig& c, const std::string& v) { c.train.adam.beta1 = parse_real(v); },
                        [](const RunConfig& c) { return format_real(c.train.adam.beta1); }};
    t["train.beta2"] = {[](RunConfig& c, const std::string& v) { c.train.adam.beta2 = parse_real(v); },
                        [](const RunConfig& c) { return format_real(c.train.adam.beta2); }};
    t["train.epsilon"] = {[](RunConfig& c, const std::string& v) { c.train.adam.epsilon = parse_real(v); },
                          [](const RunConfig& c) { return format_real(c.train.adam.epsilon); }};
    t["train.lambda_schedule"] = {
        [](RunConfig& c, const std::string& v) {
          if (v == "ramp") {
            c.train.lambda_schedule = train::LambdaSchedule::ramp;
          } else if (v == "constant") {
            c.train.lambda_schedule = train::LambdaSchedule::constant;
          } else {
            throw ConfigError("lambda_schedule must be ramp or constant, got '" + v + "'");
          }
        },
        [](const RunConfig& c) {
          return std::string(c.train.lambda_schedule == train::LambdaSchedule::ramp ? "ramp" : "constant");
        }};
    t["train.grl_lambda"] = nested(&RunConfig::train, &train::TrainConfig::grl_lambda);
    t["train.segment_seconds"] = nested(&RunConfig::train, &train::TrainConfig::segment_seconds);
    t["train.source_domain"] = {[](RunConfig& c, const std::string& v) { c.source_domain = v; },
                                [](const RunConfig& c) { return c.source_domain; }};
    t["train.target_domain"] = {[](RunConfig& c, const std::string& v) { c.target_domain = v; },
                                [](const RunConfig& c) { return c.target_domain; }};
    t["train.languages"] = {[](RunConfig& c, const std::string& v) { c.train_languages = parse_list(v); },
                            [](const RunConfig& c) { return join(c.train_languages); }};
    t["eval.lengths"] = {[](RunConfig& c, const std::string& v) {
                           c.eval_lengths.clear();
                           for (const auto& x : parse_list(v)) {
                             const double s = x == "full" ? 0.0 : parse_real(x);
                             if (s < 0) throw ConfigError("eval length must be positive or 'full'");
                             c.eval_lengths.push_back(s);
                           }
                           if (c.eval_lengths.empty()) throw ConfigError("eval.lengths is empty");
                         },
                         [](const RunConfig& c) { return format_lengths(c.eval_lengths); }};
    t["embed.seconds"] = number(&RunConfig::embed_seconds);
    t["analysis.merge"] = {[](RunConfig& c, const std::string& v) { c.analysis.merge = trim(v); },
                           [](const RunConfig& c) { return c.analysis.merge; }};
    t["analysis.keep"] = {[](RunConfig& c, const std::string& v) { c.analysis.keep = parse_list(v); },
                          [](const RunConfig& c) { return join(c.analysis.keep); }};
    t["analysis.random_pairs"] = nested(&RunConfig::analysis, &AnalysisOptions::random_pairs);
    t["project.perplexity"] = nested(&RunConfig::project, &ProjectOptions::perplexity);
    t["project.iterations"] = nested(&RunConfig::project, &ProjectOptions::iterations);
    t["project.learning_rate"] = nested(&RunConfig::project, &ProjectOptions::learning_rate);
    t["project.per_language"] = nested(&RunConfig::project, &ProjectOptions::per_language);
    return t;
  }();
  return table;
}

}  // namespace

RunConfig::RunConfig() {
  synth.generating_tree = analysis::parse_newick(default_generating_tree());
  synth.speaker_scale_db = 5.0;
  synth.segments_per_language_per_domain = 200;
  split = {0.7, 0.1, 0.2};
  model.conv = {{32, 5}, {64, 10}, {64, 10}};
  model.fc_dim = 128;
  model.embed_dim = 128;
  model.domain_hidden = {128, 128};
  train.epochs = 15;
  train.batch_size = 32;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& t = fields();
  const auto it = t.find(key);
  if (it == t.end()) throw ConfigError("unknown config key '" + key + "'");
  try {
    it->second.set(*this, trim(value));
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void RunConfig::parse(const std::string& text, const std::string& origin) {
  int line_no = 0;
  for (const auto& raw : lid::split(text, '\n')) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      apply_override(line);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string RunConfig::to_text() const {
  std::string s;
  for (const auto& [key, f] : fields()) s += key + " = " + f.get(*this) + "\n";
  return s;
}

std::vector<std::string> RunConfig::keys() const {
  std::vector<std::string> out;
  for (const auto& kv : fields()) out.push_back(kv.first);
  return out;
}

std::uint64_t RunConfig::stage_seed(const std::string& stage) const { return derive_seed(seed, stage); }

corpus::SynthSpec RunConfig::synth_spec() const {
  corpus::SynthSpec s = synth;
  s.seed = stage_seed("synth");
  s.validate();
  return s;
}

model::LidModelConfig RunConfig::model_config(std::size_t n_languages) const {
  model::LidModelConfig m = model;
  m.input_dim = features.dim();
  m.n_languages = n_languages;
  m.seed = stage_seed("model");
  m.validate();
  return m;
}

train::TrainConfig RunConfig::train_config() const {
  train::TrainConfig t = train;
  t.seed = stage_seed("train");
  t.validate();
  return t;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
  RunConfig c;
  c.parse(read_text(path), path.string());
  return c;
}

}  // namespace lid
