#include <algorithm>
#include <cmath>
#include <numbers>

#include "lid/analysis.hpp"

namespace lid::analysis {

void DistanceMatrix::validate() const {
  const std::size_t n = labels.size();
  if (values.size() != n * n) throw InvalidArgument("distance matrix is not square with its labels");
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(at(i, i)) > 1e-12) throw InvalidArgument("distance matrix has a non-zero diagonal");
    for (std::size_t j = 0; j < n; ++j) {
      const double v = at(i, j);
      if (!std::isfinite(v)) throw InvalidArgument("distance matrix has non-finite entries");
      if (v < 0) throw InvalidArgument("distance matrix has negative entries");
      if (std::abs(v - at(j, i)) > 1e-9)
        throw InvalidArgument("distance matrix is not symmetric at (" + labels[i] + ", " + labels[j] + ")");
    }
  }
}

std::vector<double> DistanceMatrix::upper_triangle() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = i + 1; j < size(); ++j) out.push_back(at(i, j));
  return out;
}

std::string distance_csv(const DistanceMatrix& dm) {
  std::string s = "label";
  for (const auto& l : dm.labels) s += "," + csv_escape(l);
  s += "\n";
  for (std::size_t i = 0; i < dm.size(); ++i) {
    s += csv_escape(dm.labels[i]);
    for (std::size_t j = 0; j < dm.size(); ++j) s += "," + format_real(dm.at(i, j));
    s += "\n";
  }
  return s;
}

DistanceMatrix read_distance_csv(const std::filesystem::path& path) {
  const auto rows = read_csv(path);
  if (rows.empty()) throw IoError(path.string() + ": empty distance matrix");
  DistanceMatrix dm;
  dm.labels.assign(rows[0].begin() + 1, rows[0].end());
  if (rows.size() != dm.labels.size() + 1) throw IoError(path.string() + ": distance matrix is not square");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != dm.labels.size() + 1 || rows[r][0] != dm.labels[r - 1])
      throw IoError(path.string() + ": malformed row " + std::to_string(r + 1));
    for (std::size_t c = 1; c < rows[r].size(); ++c) dm.values.push_back(parse_real(rows[r][c]));
  }
  dm.validate();
  return dm;
}

double cosine_distance(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw InvalidArgument("cosine_distance: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw InvalidArgument("cosine_distance: zero-norm vector");
  return std::clamp(1.0 - dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 2.0);
}

DistanceMatrix cosine_distance_matrix(const PrototypeSet& ps) {
  ps.validate();
  for (std::size_t i = 0; i < ps.labels.size(); ++i) {
    double n = 0.0;
    for (double v : ps.vectors[i]) n += v * v;
    if (n == 0.0) throw InvalidArgument("prototype '" + ps.labels[i] + "' has zero norm");
  }
  const std::size_t n = ps.labels.size();
  DistanceMatrix dm{ps.labels, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dm.at(i, j) = dm.at(j, i) = cosine_distance(ps.vectors[i], ps.vectors[j]);
  return dm;
}

void GeoTable::validate() const {
  if (labels.size() != points.size()) throw InvalidArgument("geo table labels and points differ in count");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& p = points[i];
    if (!(p.lat >= -90 && p.lat <= 90) || !(p.lon >= -180 && p.lon <= 180))
      throw InvalidArgument("geo table: coordinates of '" + labels[i] + "' out of range");
    for (std::size_t j = 0; j < i; ++j)
      if (labels[j] == labels[i]) throw InvalidArgument("geo table: duplicate language '" + labels[i] + "'");
  }
}

GeoTable read_geo_table(const std::filesystem::path& path) {
  const auto rows = read_csv(path);
  if (rows.empty() || rows[0] != std::vector<std::string>{"language", "lat", "lon"})
    throw IoError(path.string() + ": expected header language,lat,lon");
  GeoTable g;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 3) throw IoError(path.string() + ": malformed row " + std::to_string(r + 1));
    g.labels.push_back(rows[r][0]);
    g.points.push_back({parse_real(rows[r][1]), parse_real(rows[r][2])});
  }
  g.validate();
  return g;
}

double haversine_km(GeoPoint a, GeoPoint b) {
  constexpr double rad = std::numbers::pi / 180.0;
  const double dlat = (b.lat - a.lat) * rad, dlon = (b.lon - a.lon) * rad;
  const double s1 = std::sin(dlat / 2), s2 = std::sin(dlon / 2);
  const double h = s1 * s1 + std::cos(a.lat * rad) * std::cos(b.lat * rad) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::atan2(std::sqrt(h), std::sqrt(std::max(0.0, 1.0 - h)));
}

DistanceMatrix geo_distance_matrix(const GeoTable& geo) {
  geo.validate();
  const std::size_t n = geo.labels.size();
  if (n < 2) throw InvalidArgument("geo_distance_matrix: need at least 2 languages");
  DistanceMatrix dm{geo.labels, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double km = haversine_km(geo.points[i], geo.points[j]);
      if (!(km > 0))
        throw InvalidArgument("geo_distance_matrix: '" + geo.labels[i] + "' and '" + geo.labels[j] +
                              "' share a location");
      dm.at(i, j) = dm.at(j, i) = std::log10(km);
    }
  return dm;
}

GeoTable select_geo(const GeoTable& geo, const std::vector<std::string>& labels) {
  GeoTable out;
  for (const auto& l : labels) {
    const auto it = std::find(geo.labels.begin(), geo.labels.end(), l);
    if (it == geo.labels.end()) throw InvalidArgument("geo table has no entry for '" + l + "'");
    out.labels.push_back(l);
    out.points.push_back(geo.points[static_cast<std::size_t>(it - geo.labels.begin())]);
  }
  return out;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("pearson: need two equally long samples (n >= 2)");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw InvalidArgument("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double pearson(const DistanceMatrix& a, const DistanceMatrix& b) {
  if (a.labels != b.labels) throw InvalidArgument("pearson: distance matrices have different labels or order");
  return pearson(a.upper_triangle(), b.upper_triangle());
}

}  // namespace lid::analysis
