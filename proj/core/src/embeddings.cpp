#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "lid/analysis.hpp"

namespace lid::analysis {

std::vector<std::string> EmbeddingSet::languages() const {
  std::vector<std::string> out;
  for (const auto& it : items)
    if (std::find(out.begin(), out.end(), it.language) == out.end()) out.push_back(it.language);
  return out;
}

void EmbeddingSet::validate() const {
  if (items.empty()) throw InvalidArgument("embedding set is empty");
  const std::size_t d = dim();
  if (d == 0) throw InvalidArgument("embedding vectors are empty");
  for (const auto& it : items) {
    if (it.vector.size() != d)
      throw InvalidArgument("embedding '" + it.id + "' has dimension " + std::to_string(it.vector.size()) +
                            ", expected " + std::to_string(d));
    if (it.language.empty()) throw InvalidArgument("embedding '" + it.id + "' has no language");
    for (double v : it.vector)
      if (!std::isfinite(v)) throw InvalidArgument("embedding '" + it.id + "' has non-finite values");
  }
}

void write_embeddings(const EmbeddingSet& es, const std::filesystem::path& path) {
  es.validate();
  std::string s = "id,language,domain";
  for (std::size_t i = 0; i < es.dim(); ++i) s += ",v" + std::to_string(i);
  s += "\n";
  for (const auto& it : es.items) {
    s += csv_escape(it.id) + "," + csv_escape(it.language) + "," + csv_escape(it.domain);
    for (double v : it.vector) s += "," + format_real(v);
    s += "\n";
  }
  write_text(path, s);
}

EmbeddingSet read_embeddings(const std::filesystem::path& path) {
  const auto rows = read_csv(path);
  if (rows.empty() || rows[0].size() < 4 || rows[0][0] != "id" || rows[0][1] != "language" || rows[0][2] != "domain")
    throw IoError(path.string() + ": expected header id,language,domain,v0,...");
  EmbeddingSet es;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != rows[0].size())
      throw IoError(path.string() + ": row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                    " fields, expected " + std::to_string(rows[0].size()));
    EmbeddingSet::Item it{row[0], row[1], row[2], {}};
    for (std::size_t c = 3; c < row.size(); ++c) it.vector.push_back(parse_real(row[c]));
    es.items.push_back(std::move(it));
  }
  es.validate();
  return es;
}

const Vector& PrototypeSet::at(const std::string& label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return vectors[i];
  throw InvalidArgument("unknown language '" + label + "'");
}

void PrototypeSet::validate() const {
  if (labels.size() != vectors.size()) throw InvalidArgument("prototype labels and vectors differ in count");
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != vectors[0].size()) throw InvalidArgument("prototype dimensions differ");
    for (double v : vectors[i])
      if (!std::isfinite(v)) throw InvalidArgument("prototype '" + labels[i] + "' has non-finite values");
  }
}

PrototypeSet prototypes(const EmbeddingSet& es) {
  es.validate();
  PrototypeSet ps;
  std::vector<std::size_t> counts;
  std::map<std::string, std::size_t> index;
  for (const auto& it : es.items) {
    auto [pos, fresh] = index.emplace(it.language, ps.labels.size());
    if (fresh) {
      ps.labels.push_back(it.language);
      ps.vectors.emplace_back(es.dim(), 0.0);
      counts.push_back(0);
    }
    auto& acc = ps.vectors[pos->second];
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += it.vector[k];
    counts[pos->second] += 1;
  }
  for (std::size_t i = 0; i < ps.vectors.size(); ++i)
    for (auto& v : ps.vectors[i]) v /= static_cast<double>(counts[i]);
  return ps;
}

PrototypeSet merge_languages(const PrototypeSet& ps, const std::vector<std::string>& group,
                             const std::string& new_code) {
  if (group.empty()) throw InvalidArgument("merge_languages: empty group");
  std::vector<std::string> members;
  for (const auto& g : group)
    if (std::find(members.begin(), members.end(), g) == members.end()) members.push_back(g);
  for (const auto& g : members) (void)ps.at(g);

  PrototypeSet out;
  bool placed = false;
  Vector mean(ps.vectors.empty() ? 0 : ps.vectors[0].size(), 0.0);
  for (const auto& g : members) {
    const auto& v = ps.at(g);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += v[k];
  }
  for (auto& v : mean) v /= static_cast<double>(members.size());
  for (std::size_t i = 0; i < ps.labels.size(); ++i) {
    const bool member = std::find(members.begin(), members.end(), ps.labels[i]) != members.end();
    if (!member) {
      if (ps.labels[i] == new_code)
        throw InvalidArgument("merge_languages: '" + new_code + "' already names another language");
      out.labels.push_back(ps.labels[i]);
      out.vectors.push_back(ps.vectors[i]);
    } else if (!placed) {
      out.labels.push_back(new_code);
      out.vectors.push_back(mean);
      placed = true;
    }
  }
  return out;
}

namespace {

std::vector<std::size_t> keep_indices(const std::vector<std::string>& labels, const std::vector<std::string>& keep) {
  std::vector<std::size_t> idx;
  for (const auto& k : keep) {
    const auto it = std::find(labels.begin(), labels.end(), k);
    if (it == labels.end()) throw InvalidArgument("restrict_leaves: '" + k + "' is not present");
    idx.push_back(static_cast<std::size_t>(it - labels.begin()));
  }
  // Original order is preserved.
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

}  // namespace

PrototypeSet restrict_leaves(const PrototypeSet& ps, const std::vector<std::string>& keep) {
  PrototypeSet out;
  for (auto i : keep_indices(ps.labels, keep)) {
    out.labels.push_back(ps.labels[i]);
    out.vectors.push_back(ps.vectors[i]);
  }
  return out;
}

DistanceMatrix restrict_leaves(const DistanceMatrix& dm, const std::vector<std::string>& keep) {
  const auto idx = keep_indices(dm.labels, keep);
  DistanceMatrix out;
  for (auto i : idx) out.labels.push_back(dm.labels[i]);
  for (auto i : idx)
    for (auto j : idx) out.values.push_back(dm.at(i, j));
  return out;
}

}  // namespace lid::analysis
