#include <algorithm>
#include <cmath>
#include <limits>

#include "lid/analysis.hpp"

namespace lid::analysis {

std::vector<Merge> ward_merges(const DistanceMatrix& dm) {
  dm.validate();
  const std::size_t n = dm.size();
  if (n < 2) throw InvalidArgument("ward: need at least 2 items");

  struct Cluster {
    int id;
    std::size_t size;
    std::string key;  // smallest member label
  };
  std::vector<Cluster> active;
  for (std::size_t i = 0; i < n; ++i) active.push_back({static_cast<int>(i), 1, dm.labels[i]});
  std::vector<std::vector<double>> d(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d[i][j] = dm.at(i, j);

  auto pair_key = [&](std::size_t i, std::size_t j) {
    const auto& a = active[i].key;
    const auto& b = active[j].key;
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
  };

  std::vector<Merge> merges;
  double last = 0.0;
  while (active.size() > 1) {
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i < active.size(); ++i)
      for (std::size_t j = i + 1; j < active.size(); ++j) {
        if (d[i][j] < d[bi][bj] || (d[i][j] == d[bi][bj] && pair_key(i, j) < pair_key(bi, bj))) {
          bi = i;
          bj = j;
        }
      }
    const double dij = d[bi][bj];
    const double ni = static_cast<double>(active[bi].size), nj = static_cast<double>(active[bj].size);
    std::vector<double> row(active.size());
    for (std::size_t k = 0; k < active.size(); ++k) {
      if (k == bi || k == bj) continue;
      const double nk = static_cast<double>(active[k].size);
      const double v = ((ni + nk) * d[bi][k] * d[bi][k] + (nj + nk) * d[bj][k] * d[bj][k] - nk * dij * dij) /
                       (ni + nj + nk);
      row[k] = std::sqrt(std::max(v, 0.0));
    }
    last = std::max(last, dij);
    const int first = active[bi].key < active[bj].key ? active[bi].id : active[bj].id;
    const int second = first == active[bi].id ? active[bj].id : active[bi].id;
    merges.push_back({first, second, last});

    // The merged cluster replaces bi; bj is removed.
    active[bi] = {static_cast<int>(n + merges.size() - 1), active[bi].size + active[bj].size,
                  std::min(active[bi].key, active[bj].key)};
    for (std::size_t k = 0; k < active.size(); ++k) {
      if (k == bi || k == bj) continue;
      d[bi][k] = d[k][bi] = row[k];
    }
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
    d.erase(d.begin() + static_cast<std::ptrdiff_t>(bj));
    for (auto& r : d) r.erase(r.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  return merges;
}

namespace {

ClusterTree tree_from_merges(const std::vector<std::string>& labels, const std::vector<Merge>& merges) {
  ClusterTree t;
  std::vector<int> node;
  for (const auto& l : labels) node.push_back(t.add_leaf(l));
  for (const auto& m : merges) node.push_back(t.add_internal({node[m.a], node[m.b]}, m.height));
  t.validate();
  return t;
}

}  // namespace

ClusterTree ward_cluster(const DistanceMatrix& dm) { return tree_from_merges(dm.labels, ward_merges(dm)); }

ClusterTree random_tree(const std::vector<std::string>& labels, Rng& rng) {
  if (labels.size() < 2) throw InvalidArgument("random_tree: need at least 2 leaves");
  const std::size_t n = labels.size();
  DistanceMatrix dm{labels, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dm.at(i, j) = dm.at(j, i) = rng.uniform();
  return ward_cluster(dm);
}

RandomBaseline random_tree_baseline(const std::vector<std::string>& labels, int pairs, std::uint64_t seed) {
  if (pairs < 1) throw InvalidArgument("random_tree_baseline: need at least one pair");
  Rng rng(derive_seed(seed, "random-trees"));
  RandomBaseline rb;
  for (int p = 0; p < pairs; ++p) {
    const auto a = random_tree(labels, rng);
    const auto b = random_tree(labels, rng);
    rb.samples.push_back(tree_distance(a, b));
  }
  for (double s : rb.samples) rb.mean += s;
  rb.mean /= pairs;
  for (double s : rb.samples) rb.stddev += (s - rb.mean) * (s - rb.mean);
  rb.stddev = pairs > 1 ? std::sqrt(rb.stddev / (pairs - 1)) : 0.0;
  return rb;
}

}  // namespace lid::analysis
