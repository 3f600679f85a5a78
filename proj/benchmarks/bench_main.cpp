#include <benchmark/benchmark.h>
#include <spdlog/spdlog.h>

#include "lid/analysis.hpp"
#include "lid/cluster_tree.hpp"
#include "lid/config.hpp"
#include "lid/corpus.hpp"
#include "lid/features.hpp"
#include "lid/layers.hpp"
#include "lid/trainer.hpp"

namespace {

using lid::Rng;
using lid::nn::Tensor;

Tensor<float> random_tensor(std::vector<std::size_t> shape, Rng& rng) {
  Tensor<float> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<float>(rng.gaussian());
  return t;
}

lid::features::FeatureSequence random_sequence(Rng& rng, std::size_t frames, int lang) {
  lid::features::FeatureSequence fs;
  fs.frames = frames;
  fs.dim = 13;
  for (std::size_t i = 0; i < frames * 13; ++i) fs.values.push_back(rng.gaussian());
  fs.language = "L" + std::to_string(lang);
  return fs;
}

// Second conv layer of the desk model on a 32 x 3 s batch.
void BM_Conv1dForward(benchmark::State& state) {
  Rng rng(1);
  const auto x = random_tensor({32, 294, 32}, rng);
  const auto w = random_tensor({64, 32, 10}, rng);
  const auto b = random_tensor({64}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(lid::nn::conv1d_forward(x, w, b));
}
BENCHMARK(BM_Conv1dForward)->Unit(benchmark::kMillisecond);

void BM_Conv1dBackward(benchmark::State& state) {
  Rng rng(2);
  const auto x = random_tensor({32, 294, 32}, rng);
  const auto w = random_tensor({64, 32, 10}, rng);
  const auto g = random_tensor({32, 285, 64}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(lid::nn::conv1d_backward(x, w, g));
}
BENCHMARK(BM_Conv1dBackward)->Unit(benchmark::kMillisecond);

void BM_Mfsc3s(benchmark::State& state) {
  Rng rng(3);
  lid::corpus::AudioSegment seg;
  seg.samples.resize(48000);
  for (auto& v : seg.samples) v = static_cast<float>(0.1 * rng.gaussian());
  const lid::features::FeatureConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(lid::features::mfsc(seg, cfg));
}
BENCHMARK(BM_Mfsc3s)->Unit(benchmark::kMillisecond);

void BM_SynthSegment(benchmark::State& state) {
  const auto spec = lid::RunConfig().synth_spec();
  const auto profiles = lid::corpus::language_profiles(spec);
  int i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(lid::corpus::synth_segment(spec, profiles, "L0", "target", i++));
}
BENCHMARK(BM_SynthSegment)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const bool adversarial = state.range(0) != 0;
  lid::RunConfig rc;
  auto net = lid::model::build_model(rc.model_config(6));
  auto tc = rc.train_config();
  tc.mode = adversarial ? lid::train::TrainMode::adversarial : lid::train::TrainMode::baseline;
  Rng rng(4);
  std::vector<lid::features::FeatureSequence> seqs;
  for (int i = 0; i < 32; ++i) seqs.push_back(random_sequence(rng, 298, i % 6));
  std::vector<lid::train::Example> src, tgt;
  for (int i = 0; i < 16; ++i) {
    src.push_back({&seqs[i], i % 6});
    tgt.push_back({&seqs[16 + i], -1});
  }
  if (!adversarial)
    for (int i = 16; i < 32; ++i) src.push_back({&seqs[i], i % 6});
  for (auto _ : state) benchmark::DoNotOptimize(lid::train::train_step(net, src, tgt, tc, 0.5));
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

lid::analysis::DistanceMatrix random_matrix(std::size_t n, Rng& rng) {
  lid::analysis::DistanceMatrix dm;
  dm.values.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) dm.labels.push_back("x" + std::to_string(i));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dm.at(i, j) = dm.at(j, i) = rng.uniform();
  return dm;
}

void BM_Ward(benchmark::State& state) {
  Rng rng(5);
  const auto dm = random_matrix(static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(lid::analysis::ward_cluster(dm));
}
BENCHMARK(BM_Ward)->Arg(8)->Arg(64)->Arg(256);

void BM_TreeDistance(benchmark::State& state) {
  Rng rng(6);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = lid::analysis::ward_cluster(random_matrix(n, rng));
  const auto b = lid::analysis::ward_cluster(random_matrix(n, rng));
  for (auto _ : state) benchmark::DoNotOptimize(lid::analysis::tree_distance(a, b));
}
BENCHMARK(BM_TreeDistance)->Arg(8)->Arg(64);

void BM_Tsne(benchmark::State& state) {
  Rng rng(7);
  std::vector<lid::analysis::Vector> data(static_cast<std::size_t>(state.range(0)), lid::analysis::Vector(128));
  for (auto& v : data)
    for (auto& x : v) x = rng.gaussian();
  lid::analysis::TsneConfig cfg;
  cfg.iterations = 250;
  for (auto _ : state) benchmark::DoNotOptimize(lid::analysis::tsne(data, cfg));
}
BENCHMARK(BM_Tsne)->Arg(200)->Unit(benchmark::kMillisecond);

const bool quiet = [] {
  spdlog::set_level(spdlog::level::err);
  return true;
}();

}  // namespace

BENCHMARK_MAIN();
