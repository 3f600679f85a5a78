#include <algorithm>
#include <cmath>
#include <limits>

#include "lid/analysis.hpp"

namespace lid::analysis {

namespace {

// Row i of the conditional affinities with the bandwidth that matches the
// target perplexity (entropy in nats).
void conditional_row(const std::vector<double>& d2, std::size_t i, double log_perp, std::vector<double>& p) {
  const std::size_t n = d2.size();
  double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j)
    if (j != i) dmin = std::min(dmin, d2[j]);
  for (int step = 0; step < 50; ++step) {
    double sum = 0.0, wsum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) {
        p[j] = 0.0;
        continue;
      }
      // Shift by the nearest distance to avoid underflow; cancels on normalization.
      p[j] = std::exp(-beta * (d2[j] - dmin));
      sum += p[j];
      wsum += p[j] * (d2[j] - dmin);
    }
    const double entropy = std::log(sum) + beta * wsum / sum;
    for (std::size_t j = 0; j < n; ++j) p[j] /= sum;
    const double diff = entropy - log_perp;
    if (std::abs(diff) < 1e-5) break;
    if (diff > 0) {
      lo = beta;
      beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
    } else {
      hi = beta;
      beta = (beta + lo) / 2.0;
    }
  }
}

double kl_divergence(const std::vector<double>& p, const std::vector<std::array<double, 2>>& y) {
  const std::size_t n = y.size();
  std::vector<double> num(n * n, 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
      const double q = 1.0 / (1.0 + dx * dx + dy * dy);
      num[i * n + j] = num[j * n + i] = q;
      sum += 2.0 * q;
    }
  double kl = 0.0;
  for (std::size_t k = 0; k < n * n; ++k)
    if (p[k] > 0) kl += p[k] * std::log(p[k] / std::max(num[k] / sum, 1e-300));
  return kl;
}

}  // namespace

TsneResult tsne(const std::vector<Vector>& data, const TsneConfig& cfg) {
  const std::size_t n = data.size();
  if (!(cfg.perplexity > 0)) throw InvalidArgument("tsne: perplexity must be positive");
  if (static_cast<double>(n) <= 3.0 * cfg.perplexity)
    throw InvalidArgument("tsne: sample size " + std::to_string(n) + " must exceed 3 * perplexity");
  if (cfg.iterations < 100) throw InvalidArgument("tsne: need at least 100 iterations");
  const std::size_t dim = data[0].size();
  for (const auto& v : data)
    if (v.size() != dim) throw InvalidArgument("tsne: inconsistent dimensions");

  std::vector<std::vector<double>> d2(n, std::vector<double>(n, 0.0));
  double dmax = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double t = data[i][k] - data[j][k];
        s += t * t;
      }
      d2[i][j] = d2[j][i] = s;
      dmax = std::max(dmax, s);
    }
  if (dmax == 0.0) throw InvalidArgument("tsne: all points are identical");

  std::vector<double> p(n * n, 0.0), row(n);
  const double log_perp = std::log(cfg.perplexity);
  for (std::size_t i = 0; i < n; ++i) {
    conditional_row(d2[i], i, log_perp, row);
    for (std::size_t j = 0; j < n; ++j) p[i * n + j] = row[j];
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::max((p[i * n + j] + p[j * n + i]) / (2.0 * static_cast<double>(n)), 1e-12);
      p[i * n + j] = p[j * n + i] = v;
    }

  Rng rng(derive_seed(cfg.seed, "tsne-init"));
  TsneResult res;
  res.points.resize(n);
  for (auto& y : res.points) y = {1e-4 * rng.gaussian(), 1e-4 * rng.gaussian()};
  res.initial_kl = kl_divergence(p, res.points);

  std::vector<std::array<double, 2>> update(n, {0.0, 0.0}), gains(n, {1.0, 1.0}), grad(n);
  std::vector<double> num(n * n);
  // Short runs keep three quarters of their iterations for the unexaggerated phase.
  const int early = std::min(cfg.exaggeration_iters, cfg.iterations / 4);
  for (int it = 0; it < cfg.iterations; ++it) {
    const double exag = it < early ? cfg.exaggeration : 1.0;
    const double momentum = it < early ? cfg.momentum_initial : cfg.momentum_final;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = res.points[i][0] - res.points[j][0], dy = res.points[i][1] - res.points[j][1];
        const double q = 1.0 / (1.0 + dx * dx + dy * dy);
        num[i * n + j] = num[j * n + i] = q;
        sum += 2.0 * q;
      }
    for (std::size_t i = 0; i < n; ++i) {
      double gx = 0.0, gy = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double q = num[i * n + j];
        const double w = (exag * p[i * n + j] - q / sum) * q;
        gx += w * (res.points[i][0] - res.points[j][0]);
        gy += w * (res.points[i][1] - res.points[j][1]);
      }
      grad[i] = {4.0 * gx, 4.0 * gy};
    }
    double mean[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < 2; ++k) {
        const bool same = (grad[i][k] > 0) == (update[i][k] > 0);
        gains[i][k] = std::max(same ? gains[i][k] * 0.8 : gains[i][k] + 0.2, 0.01);
        update[i][k] = momentum * update[i][k] - cfg.learning_rate * gains[i][k] * grad[i][k];
        res.points[i][k] += update[i][k];
        mean[k] += res.points[i][k];
      }
    }
    for (auto& y : res.points)
      for (int k = 0; k < 2; ++k) y[k] -= mean[k] / static_cast<double>(n);
  }
  res.final_kl = kl_divergence(p, res.points);
  return res;
}

}  // namespace lid::analysis
