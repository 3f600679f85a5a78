#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lid/cluster_tree.hpp"
#include "lid/common.hpp"

namespace lid::analysis {

using Vector = std::vector<double>;

struct EmbeddingSet {
  struct Item {
    std::string id;
    std::string language;
    std::string domain;
    Vector vector;
  };
  std::vector<Item> items;
  std::string checkpoint_digest;
  double segment_seconds = 0.0;

  std::size_t dim() const { return items.empty() ? 0 : items.front().vector.size(); }
  // Languages in first-appearance order.
  std::vector<std::string> languages() const;
  void validate() const;
};

// CSV: id,language,domain,v0,v1,...
void write_embeddings(const EmbeddingSet& es, const std::filesystem::path& path);
EmbeddingSet read_embeddings(const std::filesystem::path& path);

// Ordered language -> vector map.
struct PrototypeSet {
  std::vector<std::string> labels;
  std::vector<Vector> vectors;

  const Vector& at(const std::string& label) const;
  void validate() const;
};

// Per-language arithmetic mean, languages in first-appearance order.
PrototypeSet prototypes(const EmbeddingSet& es);
// Replaces the members of `group` by their mean, stored under new_code at
// the position of the first member.
PrototypeSet merge_languages(const PrototypeSet& ps, const std::vector<std::string>& group,
                             const std::string& new_code);
PrototypeSet restrict_leaves(const PrototypeSet& ps, const std::vector<std::string>& keep);

struct DistanceMatrix {
  std::vector<std::string> labels;
  std::vector<double> values;  // n * n, row-major

  std::size_t size() const { return labels.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * labels.size() + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * labels.size() + j]; }
  // Symmetric within 1e-9, zero diagonal, non-negative, finite.
  void validate() const;
  std::vector<double> upper_triangle() const;
};

DistanceMatrix restrict_leaves(const DistanceMatrix& dm, const std::vector<std::string>& keep);
std::string distance_csv(const DistanceMatrix& dm);
DistanceMatrix read_distance_csv(const std::filesystem::path& path);

double cosine_distance(const Vector& a, const Vector& b);
DistanceMatrix cosine_distance_matrix(const PrototypeSet& ps);

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
};
// Ordered language -> coordinate table.
struct GeoTable {
  std::vector<std::string> labels;
  std::vector<GeoPoint> points;

  void validate() const;
};
// CSV: language,lat,lon
GeoTable read_geo_table(const std::filesystem::path& path);

inline constexpr double kEarthRadiusKm = 6371.0088;
double haversine_km(GeoPoint a, GeoPoint b);
// log10 of the great-circle distance; the diagonal is 0.
DistanceMatrix geo_distance_matrix(const GeoTable& geo);
// Reorders a geo table to the given labels (all must be present).
GeoTable select_geo(const GeoTable& geo, const std::vector<std::string>& labels);

double pearson(const std::vector<double>& x, const std::vector<double>& y);
// Over the strict upper triangle; both matrices need identical labels.
double pearson(const DistanceMatrix& a, const DistanceMatrix& b);

struct Merge {
  int a = 0;  // cluster ids: 0..n-1 leaves, n.. merged clusters
  int b = 0;
  double height = 0.0;
};

// Agglomerative clustering with the Ward Lance-Williams update.  Among
// equal distances the pair whose smallest member labels sort first wins.
std::vector<Merge> ward_merges(const DistanceMatrix& dm);
ClusterTree ward_cluster(const DistanceMatrix& dm);

// Mean and standard deviation of tree_distance over `pairs` pairs of
// random trees on `labels`; each is the Ward clustering of a random
// symmetric dissimilarity matrix with entries uniform in (0, 1).
struct RandomBaseline {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> samples;
};
ClusterTree random_tree(const std::vector<std::string>& labels, Rng& rng);
RandomBaseline random_tree_baseline(const std::vector<std::string>& labels, int pairs, std::uint64_t seed);

struct TsneConfig {
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  int exaggeration_iters = 250;  // capped at iterations / 4
  double exaggeration = 12.0;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  std::uint64_t seed = 1;
};

struct TsneResult {
  std::vector<std::array<double, 2>> points;
  double initial_kl = 0.0;  // KL of the initial layout against the true P
  double final_kl = 0.0;
};

TsneResult tsne(const std::vector<Vector>& data, const TsneConfig& cfg);

}  // namespace lid::analysis
