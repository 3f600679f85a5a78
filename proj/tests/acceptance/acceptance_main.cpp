// Prints one PASS/FAIL line per acceptance criterion.
// usage: lid_acceptance [--quick] [--config FILE] [--work DIR]
//   --quick skips the five-seed synthetic experiment (criteria 5-8).
//   --pipeline-only DIR runs the tiny pipeline once (used as a child process).
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <set>
#include <string>

#include <spdlog/spdlog.h>

#include "experiment.hpp"
#include "lid/checkpoint.hpp"
#include "lid/gradcheck.hpp"
#include "lid/layers.hpp"
#include "lid/metrics.hpp"
#include "lid/trainer.hpp"

namespace {

using lid::Rng;
using lid::nn::Mode;
using lid::nn::Tensor;
namespace an = lid::analysis;
namespace fs = std::filesystem;
namespace nn = lid::nn;

constexpr int kSeeds = 20;
constexpr double kGradTol = 1e-4;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
  std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void skip(int id, const std::string& name) { std::printf("SKIP %2d %s: --quick\n", id, name.c_str()); }

Tensor<double> random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.data()) v = scale * rng.gaussian();
  return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

using Fn = std::function<double(const Tensor<double>&)>;

double grad_error(const Tensor<double>& analytic, const Fn& f, const Tensor<double>& at) {
  return nn::relative_error(analytic, nn::finite_diff_grad(f, at));
}

// ---------------------------------------------------------------- 1

Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  std::map<std::string, double> worst;
  auto note = [&](const std::string& layer, double e) { worst[layer] = std::max(worst[layer], e); };
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(5000 + seed);
    {
      const std::size_t T = 7 + rng.index(5), W = 1 + rng.index(4);
      const auto x = random_tensor({2, T, 3}, rng), w = random_tensor({4, 3, W}, rng), b = random_tensor({4}, rng);
      const auto up = random_tensor({2, T - W + 1, 4}, rng);
      const auto g = nn::conv1d_backward(x, w, up);
      note("conv1d", grad_error(g.input, [&](const Tensor<double>& p) { return dot(nn::conv1d_forward(p, w, b), up); }, x));
      note("conv1d", grad_error(g.weight, [&](const Tensor<double>& p) { return dot(nn::conv1d_forward(x, p, b), up); }, w));
      note("conv1d", grad_error(g.bias, [&](const Tensor<double>& p) { return dot(nn::conv1d_forward(x, w, p), up); }, b));
    }
    {
      const std::size_t B = 2 + rng.index(3), T = 3 + rng.index(4);
      const auto x = random_tensor({B, T, 3}, rng, 2.0), gm = random_tensor({3}, rng), bt = random_tensor({3}, rng);
      const auto up = random_tensor({B, T, 3}, rng);
      auto fwd = [&](const Tensor<double>& xx, const Tensor<double>& gg, const Tensor<double>& bb) {
        nn::BatchNormStats<double> st(3);
        return nn::batchnorm_forward<double>(xx, gg, bb, st, Mode::train, nullptr);
      };
      nn::BatchNormStats<double> st(3);
      nn::BatchNormCache<double> cache;
      nn::batchnorm_forward<double>(x, gm, bt, st, Mode::train, &cache);
      const auto g = nn::batchnorm_backward(cache, gm, up);
      note("batchnorm", grad_error(g.input, [&](const Tensor<double>& p) { return dot(fwd(p, gm, bt), up); }, x));
      note("batchnorm", grad_error(g.gamma, [&](const Tensor<double>& p) { return dot(fwd(x, p, bt), up); }, gm));
      note("batchnorm", grad_error(g.beta, [&](const Tensor<double>& p) { return dot(fwd(x, gm, p), up); }, bt));
    }
    {
      auto x = random_tensor({3, 5}, rng);
      for (auto& v : x.data())
        if (std::abs(v) < 1e-3) v = 0.5;
      const auto up = random_tensor({3, 5}, rng);
      note("relu", grad_error(nn::relu_backward(x, up), [&](const Tensor<double>& p) { return dot(nn::relu_forward(p), up); }, x));
    }
    {
      std::vector<double> vals(2 * 6 * 4);
      for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = 0.01 * static_cast<double>(i);
      rng.shuffle(vals);
      const Tensor<double> x({2, 6, 4}, vals);
      const auto up = random_tensor({2, 4}, rng);
      const auto r = nn::maxpool_time_forward(x);
      note("maxpool", grad_error(nn::maxpool_time_backward(up, r.argmax, 6),
                                 [&](const Tensor<double>& p) { return dot(nn::maxpool_time_forward(p).output, up); }, x));
    }
    {
      const std::size_t B = 1 + rng.index(4), I = 1 + rng.index(6), O = 1 + rng.index(6);
      const auto x = random_tensor({B, I}, rng), w = random_tensor({O, I}, rng), b = random_tensor({O}, rng);
      const auto up = random_tensor({B, O}, rng);
      const auto g = nn::linear_backward(x, w, up);
      note("linear", grad_error(g.input, [&](const Tensor<double>& p) { return dot(nn::linear_forward(p, w, b), up); }, x));
      note("linear", grad_error(g.weight, [&](const Tensor<double>& p) { return dot(nn::linear_forward(x, p, b), up); }, w));
      note("linear", grad_error(g.bias, [&](const Tensor<double>& p) { return dot(nn::linear_forward(x, w, p), up); }, b));
    }
    {
      const std::size_t B = 1 + rng.index(5), K = 2 + rng.index(5);
      const auto logits = random_tensor({B, K}, rng, 3.0);
      std::vector<int> labels(B);
      for (auto& l : labels) l = static_cast<int>(rng.index(K));
      note("softmax_xent", grad_error(nn::softmax_xent(logits, labels).grad,
                                      [&](const Tensor<double>& p) { return nn::softmax_xent(p, labels).loss; }, logits));
    }
    {
      const auto f = random_tensor({4, 5}, rng), w = random_tensor({2, 5}, rng), b = random_tensor({2}, rng);
      const std::vector<int> dom{0, 0, 1, 1};
      const double lambda = rng.uniform(0.1, 2.0);
      const auto xent = nn::softmax_xent(nn::linear_forward(nn::grl_forward(f), w, b), dom);
      const auto g = nn::grl_backward(nn::linear_backward(f, w, xent.grad).input, lambda);
      auto expected = nn::finite_diff_grad(
          [&](const Tensor<double>& p) { return nn::softmax_xent(nn::linear_forward(p, w, b), dom).loss; }, f);
      for (auto& v : expected.data()) v *= -lambda;
      note("grl", nn::relative_error(g, expected));
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Outcome o;
  char buf[64];
  for (const auto& [layer, e] : worst) {
    std::snprintf(buf, sizeof(buf), "%s %.1e, ", layer.c_str(), e);
    o.detail += buf;
    o.pass = o.pass && e < kGradTol;
  }
  std::snprintf(buf, sizeof(buf), "%d seeds each, %.2f s", kSeeds, secs);
  o.detail += buf;
  o.pass = o.pass && secs < 60.0;
  return o;
}

// ---------------------------------------------------------------- 2

lid::features::FeatureSequence random_sequence(Rng& rng, std::size_t frames, int lang) {
  lid::features::FeatureSequence s;
  s.frames = frames;
  s.dim = 3;
  for (std::size_t i = 0; i < frames * 3; ++i) s.values.push_back(rng.gaussian());
  s.language = "L" + std::to_string(lang);
  return s;
}

Outcome grl_contract() {
  Outcome o;
  int forward_bad = 0, backward_bad = 0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(6000 + seed);
    const auto x = random_tensor({4, 7}, rng).cast<float>();
    forward_bad += !(nn::grl_forward(x) == x);
    const double lambda = rng.uniform(0.0, 3.0);
    const auto g = random_tensor({4, 7}, rng).cast<float>();
    const auto back = nn::grl_backward(g, lambda);
    for (std::size_t i = 0; i < g.size(); ++i) backward_bad += back[i] != -static_cast<float>(lambda) * g[i];
  }
  double max_diff = 0.0;
  for (int seed = 0; seed < 5; ++seed) {
    lid::model::LidModelConfig mc;
    mc.input_dim = 3;
    mc.conv = {{4, 2}, {3, 3}};
    mc.fc_dim = 5;
    mc.embed_dim = 4;
    mc.domain_hidden = {3};
    mc.n_languages = 3;
    mc.seed = 70 + static_cast<std::uint64_t>(seed);
    Rng rng(80 + seed);
    std::vector<lid::features::FeatureSequence> src, tgt;
    for (int i = 0; i < 6; ++i) src.push_back(random_sequence(rng, 9, i % 3));
    for (int i = 0; i < 6; ++i) tgt.push_back(random_sequence(rng, 9, i % 3));
    std::vector<lid::train::Example> es, et;
    for (int i = 0; i < 6; ++i) {
      es.push_back({&src[i], i % 3});
      et.push_back({&tgt[i], -1});
    }
    auto base = lid::model::build_model(mc);
    auto adv = base;
    lid::train::TrainConfig bc;
    auto ac = bc;
    ac.mode = lid::train::TrainMode::adversarial;
    for (int step = 0; step < 3; ++step) {
      lid::train::train_step(base, es, {}, bc, 0.0);
      lid::train::train_step(adv, es, et, ac, 0.0);
    }
    for (std::size_t i = 0; i < base.params().size(); ++i) {
      const auto& p = base.params()[i];
      if (p.group == nn::Group::domain) continue;
      for (std::size_t k = 0; k < p.value.size(); ++k)
        max_diff = std::max(max_diff, std::abs(static_cast<double>(p.value[k] - adv.params()[i].value[k])));
    }
  }
  o.pass = forward_bad == 0 && backward_bad == 0 && max_diff == 0.0;
  o.detail = "forward mismatches " + std::to_string(forward_bad) + ", backward mismatches " +
             std::to_string(backward_bad) + ", lambda=0 step max |diff| on F,G = " + lid::format_real(max_diff);
  return o;
}

// ---------------------------------------------------------------- 3

double chord_km(an::GeoPoint a, an::GeoPoint b) {
  const double d = std::numbers::pi / 180.0;
  auto xyz = [&](an::GeoPoint p) {
    return std::array<double, 3>{std::cos(p.lat * d) * std::cos(p.lon * d), std::cos(p.lat * d) * std::sin(p.lon * d),
                                 std::sin(p.lat * d)};
  };
  const auto u = xyz(a), v = xyz(b);
  double s = 0.0;
  for (int k = 0; k < 3; ++k) s += (u[k] - v[k]) * (u[k] - v[k]);
  return 2.0 * an::kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(s) / 2.0));
}

std::set<std::string> members(const std::vector<an::Merge>& merges, const std::vector<std::string>& labels, int id) {
  const int n = static_cast<int>(labels.size());
  if (id < n) return {labels[static_cast<std::size_t>(id)]};
  auto a = members(merges, labels, merges[static_cast<std::size_t>(id - n)].a);
  const auto b = members(merges, labels, merges[static_cast<std::size_t>(id - n)].b);
  a.insert(b.begin(), b.end());
  return a;
}

Outcome metric_oracles() {
  constexpr int kInstances = 100;
  Rng rng(7000);
  double e_bacc = 0, e_f1 = 0, e_pearson = 0, e_km = 0, e_ward = 0;
  int ward_topology_bad = 0;
  for (int trial = 0; trial < kInstances; ++trial) {
    const std::size_t k = 2 + rng.index(6), n = 1 + rng.index(60);
    std::vector<std::size_t> y, p;
    for (std::size_t i = 0; i < n; ++i) {
      y.push_back(rng.index(k));
      p.push_back(rng.uniform() < 0.6 ? y.back() : rng.index(k));
    }
    const auto cm = lid::metrics::confusion(p, y, k);
    double recall_sum = 0;
    int present = 0;
    std::vector<double> f1(k);
    double macro = 0;
    int macro_n = 0, correct = 0;
    for (std::size_t c = 0; c < k; ++c) {
      double tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        tp += p[i] == c && y[i] == c;
        fp += p[i] == c && y[i] != c;
        fn += p[i] != c && y[i] == c;
      }
      if (tp + fn > 0) {
        recall_sum += tp / (tp + fn);
        ++present;
      }
      f1[c] = tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
      if (tp + fp + fn > 0) {
        macro += f1[c];
        ++macro_n;
      }
    }
    for (std::size_t i = 0; i < n; ++i) correct += p[i] == y[i];
    e_bacc = std::max(e_bacc, std::abs(lid::metrics::balanced_accuracy(cm) - recall_sum / present));
    const auto rep = lid::metrics::f1_per_class(cm);
    for (std::size_t c = 0; c < k; ++c) e_f1 = std::max(e_f1, std::abs(rep.f1[c] - f1[c]));
    e_f1 = std::max(e_f1, std::abs(rep.macro - macro / macro_n));
    e_f1 = std::max(e_f1, std::abs(rep.micro - static_cast<double>(correct) / static_cast<double>(n)));

    std::vector<double> a, b;
    for (int i = 0; i < 20; ++i) {
      a.push_back(rng.gaussian());
      b.push_back(0.5 * a.back() + rng.gaussian());
    }
    double ma = 0, mb = 0;
    for (int i = 0; i < 20; ++i) {
      ma += a[i] / 20;
      mb += b[i] / 20;
    }
    double sab = 0, saa = 0, sbb = 0;
    for (int i = 0; i < 20; ++i) {
      sab += (a[i] - ma) * (b[i] - mb);
      saa += (a[i] - ma) * (a[i] - ma);
      sbb += (b[i] - mb) * (b[i] - mb);
    }
    e_pearson = std::max(e_pearson, std::abs(an::pearson(a, b) - sab / std::sqrt(saa * sbb)));

    const an::GeoPoint g1{rng.uniform(-80, 80), rng.uniform(-180, 180)}, g2{rng.uniform(-80, 80), rng.uniform(-180, 180)};
    e_km = std::max(e_km, std::abs(an::haversine_km(g1, g2) - chord_km(g1, g2)));

    // Ward on Euclidean points against centroid-based merge costs.
    std::vector<std::vector<double>> pts;
    std::vector<std::string> labels;
    for (int i = 0; i < 6; ++i) {
      pts.push_back({rng.gaussian(), rng.gaussian(), rng.gaussian()});
      labels.push_back(std::string(1, static_cast<char>('a' + i)));
    }
    an::DistanceMatrix dm{labels, std::vector<double>(36)};
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) {
        double s = 0;
        for (std::size_t d = 0; d < 3; ++d) s += (pts[i][d] - pts[j][d]) * (pts[i][d] - pts[j][d]);
        dm.at(i, j) = std::sqrt(s);
      }
    const auto merges = an::ward_merges(dm);
    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < 6; ++i) clusters.push_back({i});
    for (std::size_t step = 0; clusters.size() > 1; ++step) {
      double best = 1e300;
      std::size_t bi = 0, bj = 0;
      for (std::size_t i = 0; i < clusters.size(); ++i)
        for (std::size_t j = i + 1; j < clusters.size(); ++j) {
          std::array<double, 3> ci{}, cj{};
          for (auto m : clusters[i])
            for (int d = 0; d < 3; ++d) ci[d] += pts[m][d] / static_cast<double>(clusters[i].size());
          for (auto m : clusters[j])
            for (int d = 0; d < 3; ++d) cj[d] += pts[m][d] / static_cast<double>(clusters[j].size());
          double s = 0;
          for (int d = 0; d < 3; ++d) s += (ci[d] - cj[d]) * (ci[d] - cj[d]);
          const double ni = static_cast<double>(clusters[i].size()), nj = static_cast<double>(clusters[j].size());
          const double cost = std::sqrt(2.0 * ni * nj / (ni + nj) * s);
          if (cost < best) {
            best = cost;
            bi = i;
            bj = j;
          }
        }
      auto merged = clusters[bi];
      merged.insert(merged.end(), clusters[bj].begin(), clusters[bj].end());
      std::set<std::string> want;
      for (auto m : merged) want.insert(labels[m]);
      ward_topology_bad += members(merges, labels, static_cast<int>(6 + step)) != want;
      e_ward = std::max(e_ward, std::abs(merges[step].height - best));
      clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
      clusters[bi] = merged;
    }
  }
  Outcome o;
  o.pass = e_bacc < 1e-9 && e_f1 < 1e-9 && e_pearson < 1e-9 && e_km < 1e-6 && e_ward < 1e-9 && ward_topology_bad == 0;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%d instances; max error bacc %.1e, f1 %.1e, pearson %.1e, haversine %.1e km, ward height %.1e, "
                "ward merge mismatches %d",
                kInstances, e_bacc, e_f1, e_pearson, e_km, e_ward, ward_topology_bad);
  o.detail = buf;
  return o;
}

// ---------------------------------------------------------------- 4

Outcome published_deltas() {
  struct Cell {
    double a, b, delta;
  };
  const std::vector<Cell> cells{
      {72.93, 64.25, -11.9}, {91.10, 88.55, -2.80}, {95.48, 94.77, -0.74}, {97.38, 97.35, -0.03},
      {30.18, 51.59, 70.94}, {47.61, 76.76, 61.23}, {55.91, 86.94, 55.50}, {65.45, 93.29, 42.54},
      {59.73, 85.12, 42.51}, {64.86, 83.32, 28.46}, {76.50, 89.36, 16.81}, {61.93, 83.96, 35.57},
      {41.79, 87.66, 109.76}, {14.66, 94.49, 544.54}, {53.25, 87.32, 63.98}, {54.17, 88.26, 62.93}};
  Outcome o;
  double worst = 0;
  for (const auto& c : cells) worst = std::max(worst, std::abs(lid::metrics::relative_delta(c.a, c.b) - c.delta));
  o.pass = worst <= 0.05;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu published cells, max |error| %.4f", cells.size(),
                worst);
  o.detail = buf;
  return o;
}

// ---------------------------------------------------------------- 9

Outcome tsne_sanity(const std::vector<lid::experiment::Report>& reports) {
  Rng rng(9000);
  std::vector<an::Vector> data;
  std::vector<int> label;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 30; ++i) {
      an::Vector v(512);
      for (auto& x : v) x = 0.01 * rng.gaussian();
      v[static_cast<std::size_t>(c)] += std::numbers::sqrt2 / 2.0;
      data.push_back(v);
      label.push_back(c);
    }
  an::TsneConfig cfg;
  cfg.perplexity = 10;
  cfg.iterations = 500;
  cfg.seed = 3;
  const auto res = an::tsne(data, cfg);
  const auto again = an::tsne(data, cfg);
  int pure = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double best = 1e300;
    std::size_t nn_i = i;
    for (std::size_t j = 0; j < data.size(); ++j) {
      if (i == j) continue;
      const double dx = res.points[i][0] - res.points[j][0], dy = res.points[i][1] - res.points[j][1];
      if (dx * dx + dy * dy < best) {
        best = dx * dx + dy * dy;
        nn_i = j;
      }
    }
    pure += label[nn_i] == label[i];
  }
  const double purity = static_cast<double>(pure) / static_cast<double>(data.size());
  int runs = 1, kl_ok = res.final_kl < res.initial_kl;
  for (int seed = 1; seed <= 3; ++seed) {
    std::vector<an::Vector> noise;
    for (int i = 0; i < 40; ++i) noise.push_back({rng.gaussian(), rng.gaussian(), rng.gaussian(), rng.gaussian()});
    an::TsneConfig c;
    c.perplexity = 8;
    c.iterations = 250 + 150 * seed;
    c.seed = static_cast<std::uint64_t>(seed);
    const auto r = an::tsne(noise, c);
    ++runs;
    kl_ok += r.final_kl < r.initial_kl;
  }
  for (const auto& r : reports) {
    ++runs;
    kl_ok += r.tsne_final_kl < r.tsne_initial_kl;
  }
  Outcome o;
  o.pass = kl_ok == runs && purity >= 0.9 && again.points == res.points;
  char buf[200];
  std::snprintf(buf, sizeof(buf), "KL decreased on %d/%d runs, 3-cluster 1-NN purity %.3f, rerun %s", kl_ok, runs,
                purity, again.points == res.points ? "identical" : "differs");
  o.detail = buf;
  return o;
}

// ---------------------------------------------------------------- 10

std::map<std::string, std::vector<std::uint8_t>> snapshot(const fs::path& dir) {
  std::map<std::string, std::vector<std::uint8_t>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = lid::read_file(e.path());
  return out;
}

lid::RunConfig tiny_config() {
  lid::RunConfig cfg;
  cfg.parse(
      "seed = 11\nsynth.segments = 10\nsynth.segment_seconds = 3.2\nmodel.conv = 8x5,8x5\nmodel.fc_dim = 16\n"
      "model.embed_dim = 16\nmodel.domain_hidden = 16\ntrain.epochs = 2\ntrain.batch_size = 8\nembed.seconds = 3\n"
      "project.iterations = 120\nproject.perplexity = 3\n");
  return cfg;
}

// The second run happens in a child process so heap layout differs too.
Outcome determinism(const fs::path& work, const std::string& self) {
  lid::experiment::run(tiny_config(), work / "a");
  const std::string cmd = "\"" + self + "\" --pipeline-only \"" + (work / "b").string() + "\"";
  if (std::system(cmd.c_str()) != 0) return {false, "child run failed: " + cmd};
  const auto a = snapshot(work / "a"), b = snapshot(work / "b");
  int differ = 0, features = 0;
  std::set<std::string> kinds;
  for (const auto& [name, bytes] : a) {
    const auto it = b.find(name);
    differ += it == b.end() || it->second != bytes;
    features += name.ends_with(".lidf");
    kinds.insert(fs::path(name).extension().string());
  }
  differ += static_cast<int>(b.size()) - static_cast<int>(a.size());

  bool roundtrip = true;
  for (const auto& [name, bytes] : a) {
    if (name.ends_with(".lidm")) {
      const auto ck = lid::model::decode_checkpoint(bytes);
      roundtrip = roundtrip && lid::model::encode_checkpoint(ck.model, ck.meta) == bytes;
    } else if (name.ends_with(".lidf")) {
      roundtrip = roundtrip && lid::features::encode_features(lid::features::decode_features(bytes)) == bytes;
    }
  }
  Outcome o;
  const bool complete = kinds.count(".lidm") && kinds.count(".lidf") && kinds.count(".csv") && kinds.count(".nwk");
  o.pass = differ == 0 && roundtrip && complete;
  o.detail = std::to_string(a.size()) + " files (" + std::to_string(features) + " feature files, checkpoints, " +
             "matrices, Newick) compared across two runs: " + std::to_string(differ) + " differ; round trips " +
             (roundtrip ? "bit-exact" : "NOT exact");
  return o;
}

// ---------------------------------------------------------------- 5-8

std::string pct(double v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * v);
  return buf;
}

void synthetic(const std::vector<lid::experiment::Report>& reps) {
  int a_ok = 0, b_ok = 0;
  std::string rows;
  double f1_base = 0, f1_adv = 0;
  int f1_seeds = 0, tree_ok = 0, held_ok = 0, geo_ok = 0;
  std::string f1_rows, tree_rows, geo_rows;
  for (const auto& r : reps) {
    const auto& b = r.baseline;
    const auto& a = r.adversarial;
    const bool ca = b.in_domain - b.cross_domain >= 0.15;
    const bool cb = a.cross_domain - b.cross_domain >= 0.10 && std::abs(a.in_domain - b.in_domain) <= 0.05;
    a_ok += ca;
    b_ok += cb;
    rows += " [seed " + std::to_string(r.seed) + ": base " + pct(b.in_domain) + "/" + pct(b.cross_domain) + ", adv " +
            pct(a.in_domain) + "/" + pct(a.cross_domain) + "]";
    f1_base += b.cross_f1_std;
    f1_adv += a.cross_f1_std;
    f1_seeds += a.cross_f1_std < b.cross_f1_std;
    f1_rows += " " + pct(b.cross_f1_std) + "->" + pct(a.cross_f1_std);
    tree_ok += r.tree_distance == 0.0;
    held_ok += r.held_out_placed;
    tree_rows += " " + lid::format_real(std::round(r.tree_distance * 1000) / 1000);
    geo_ok += r.pearson_geo >= 0.5;
    char g[16];
    std::snprintf(g, sizeof(g), " %.3f", r.pearson_geo);
    geo_rows += g;
  }
  const int n = static_cast<int>(reps.size());
  report(5, "synthetic domain-shift trend",
         {a_ok >= 4 && b_ok >= 4, "baseline drop >= 15 pts on " + std::to_string(a_ok) + "/" + std::to_string(n) +
                                      " seeds, adversarial gain >= 10 pts with in-domain within 5 on " +
                                      std::to_string(b_ok) + "/" + std::to_string(n) +
                                      " (need 4); in/cross balanced accuracy %:" + rows});
  report(6, "synthetic per-language F1 spread",
         {f1_adv < f1_base, "mean cross-domain per-language F1 std " + pct(f1_base / n) + " (baseline) vs " +
                                pct(f1_adv / n) + " (adversarial); lower on " + std::to_string(f1_seeds) + "/" +
                                std::to_string(n) + " seeds:" + f1_rows});
  report(7, "tree recovery",
         {tree_ok >= 4 && held_ok >= 4, "tree distance 0 on " + std::to_string(tree_ok) + "/" + std::to_string(n) +
                                            " seeds, held-out leaves placed on " + std::to_string(held_ok) + "/" +
                                            std::to_string(n) + " (need 4); distances:" + tree_rows});
  report(8, "geographic correlation",
         {geo_ok == n, "Pearson r >= 0.5 on " + std::to_string(geo_ok) + "/" + std::to_string(n) + " seeds:" + geo_rows});
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = false;
  fs::path config, work = fs::temp_directory_path() / "lid_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--quick") {
      quick = true;
    } else if (a == "--config" && i + 1 < argc) {
      config = argv[++i];
    } else if (a == "--pipeline-only" && i + 1 < argc) {
      spdlog::set_level(spdlog::level::err);
      lid::experiment::run(tiny_config(), argv[i + 1]);
      return 0;
    } else if (a == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else {
      std::fprintf(stderr, "usage: %s [--quick] [--config FILE] [--work DIR]\n", argv[0]);
      return 2;
    }
  }
  spdlog::set_level(spdlog::level::err);
  try {
    report(1, "gradient correctness", gradients());
    report(2, "GRL contract", grl_contract());
    report(3, "metric oracles", metric_oracles());
    report(4, "relative delta arithmetic", published_deltas());

    std::vector<lid::experiment::Report> reps;
    if (quick) {
      for (int id = 5; id <= 8; ++id) skip(id, "synthetic experiment");
    } else {
      lid::RunConfig cfg = config.empty() ? lid::RunConfig() : lid::load_run_config(config);
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        cfg.seed = seed;
        const auto t0 = std::chrono::steady_clock::now();
        reps.push_back(lid::experiment::run(cfg, work / ("seed" + std::to_string(seed))));
        std::printf("     seed %llu done in %.0f s\n", static_cast<unsigned long long>(seed),
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        std::fflush(stdout);
      }
      synthetic(reps);
    }
    report(9, "t-SNE sanity", tsne_sanity(reps));
    report(10, "determinism and formats", determinism(work / "determinism", argv[0]));
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance run aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
