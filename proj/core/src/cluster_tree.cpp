#include "lid/cluster_tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "lid/common.hpp"

namespace lid::analysis {

int ClusterTree::add_leaf(std::string label, double height) {
  nodes_.push_back(Node{std::move(label), {}, height, -1});
  const int id = static_cast<int>(nodes_.size()) - 1;
  if (root_ < 0) root_ = id;
  return id;
}

int ClusterTree::add_internal(std::vector<int> children, double height) {
  if (children.empty()) throw InvalidArgument("internal node needs at least one child");
  const int id = static_cast<int>(nodes_.size());
  for (int c : children) {
    if (c < 0 || c >= id) throw InvalidArgument("child index out of range");
    if (nodes_[static_cast<std::size_t>(c)].parent >= 0)
      throw InvalidArgument("node already has a parent");
  }
  nodes_.push_back(Node{{}, children, height, -1});
  for (int c : children) nodes_[static_cast<std::size_t>(c)].parent = id;
  root_ = id;
  return id;
}

std::size_t ClusterTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.children.empty(); }));
}

std::vector<int> ClusterTree::leaf_nodes() const {
  std::vector<int> out;
  if (root_ < 0) return out;
  std::vector<int> stack{root_};
  while (!stack.empty()) {
    const int n = stack.back();
    stack.pop_back();
    const auto& nd = node(n);
    if (nd.children.empty()) {
      out.push_back(n);
    } else {
      for (auto it = nd.children.rbegin(); it != nd.children.rend(); ++it) stack.push_back(*it);
    }
  }
  return out;
}

std::vector<std::string> ClusterTree::leaf_labels() const {
  std::vector<std::string> out;
  for (int n : leaf_nodes()) out.push_back(node(n).label);
  return out;
}

std::vector<int> ClusterTree::path_from_root(int n) const {
  std::vector<int> path;
  for (int cur = n; cur >= 0; cur = node(cur).parent) path.push_back(cur);
  std::reverse(path.begin(), path.end());
  return path;
}

bool ClusterTree::is_binary() const {
  return std::all_of(nodes_.begin(), nodes_.end(),
                     [](const Node& n) { return n.children.empty() || n.children.size() == 2; });
}

void ClusterTree::validate() const {
  if (root_ < 0) throw InvalidArgument("tree is empty");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.parent < 0 && static_cast<int>(i) != root_)
      throw InvalidArgument("tree has more than one root");
    if (n.children.empty()) {
      if (n.label.empty()) throw InvalidArgument("leaf without label");
      if (!seen.insert(n.label).second) throw InvalidArgument("duplicate leaf label '" + n.label + "'");
    }
    if (n.parent >= 0 && node(n.parent).height < n.height)
      throw InvalidArgument("node height exceeds its parent's height");
  }
}

std::vector<std::vector<int>> ClusterTree::leaf_path_lengths(
    const std::vector<std::string>& labels) const {
  std::map<std::string, int> by_label;
  for (int n : leaf_nodes()) by_label[node(n).label] = n;
  std::vector<std::vector<int>> paths;
  for (const auto& l : labels) {
    auto it = by_label.find(l);
    if (it == by_label.end()) throw InvalidArgument("tree has no leaf '" + l + "'");
    paths.push_back(path_from_root(it->second));
  }
  const std::size_t n = labels.size();
  std::vector<std::vector<int>> d(n, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& a = paths[i];
      const auto& b = paths[j];
      std::size_t common = 0;
      while (common < a.size() && common < b.size() && a[common] == b[common]) ++common;
      const int len = static_cast<int>((a.size() - common) + (b.size() - common));
      d[i][j] = d[j][i] = len;
    }
  }
  return d;
}

std::vector<std::string> subtree_labels(const ClusterTree& tree, int n) {
  std::vector<std::string> out;
  std::function<void(int)> walk = [&](int k) {
    const auto& nd = tree.node(k);
    if (nd.children.empty()) out.push_back(nd.label);
    for (int c : nd.children) walk(c);
  };
  walk(n);
  return out;
}

namespace {

bool needs_quotes(const std::string& label) {
  return label.empty() || label.find_first_of(" \t\n\r()[]':;,") != std::string::npos;
}

std::string quote_label(const std::string& label) {
  if (!needs_quotes(label)) return label;
  std::string out = "'";
  for (char c : label) {
    if (c == '\'') out.push_back('\'');
    out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

void emit(const ClusterTree& t, int n, std::string& out) {
  const auto& nd = t.node(n);
  if (nd.children.empty()) {
    out += quote_label(nd.label);
  } else {
    out.push_back('(');
    for (std::size_t i = 0; i < nd.children.size(); ++i) {
      if (i) out.push_back(',');
      emit(t, nd.children[i], out);
    }
    out.push_back(')');
  }
  if (nd.parent >= 0) {
    out.push_back(':');
    out += format_real(t.node(nd.parent).height - nd.height);
  }
}

class NewickParser {
 public:
  explicit NewickParser(std::string_view s) : s_(s) {}

  ClusterTree parse() {
    skip_ws();
    const int root = subtree();
    skip_ws();
    if (peek() == ':') {
      ++pos_;
      number();
    }
    skip_ws();
    if (peek() != ';') fail("expected ';'");
    ++pos_;
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters after ';'");
    return build(root);
  }

 private:
  struct Raw {
    std::string label;
    std::vector<int> children;
    double length = 1.0;
  };

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw InvalidArgument("newick: " + msg + " at offset " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos_;
      } else if (c == '[') {
        const auto end = s_.find(']', pos_);
        if (end == std::string_view::npos) fail("unterminated comment");
        pos_ = end + 1;
      } else {
        break;
      }
    }
  }

  std::string label() {
    skip_ws();
    std::string out;
    if (peek() == '\'') {
      ++pos_;
      while (true) {
        if (pos_ >= s_.size()) fail("unterminated quoted label");
        const char c = s_[pos_++];
        if (c == '\'') {
          if (peek() == '\'') {
            out.push_back('\'');
            ++pos_;
          } else {
            break;
          }
        } else {
          out.push_back(c);
        }
      }
      return out;
    }
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (std::string_view(" \t\n\r()[]':;,").find(c) != std::string_view::npos) break;
      out.push_back(c);
      ++pos_;
    }
    return out;
  }

  double number() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::string_view("0123456789+-.eE").find(s_[pos_]) != std::string_view::npos)
      ++pos_;
    if (start == pos_) fail("expected branch length");
    const double v = parse_real(s_.substr(start, pos_ - start));
    if (!(v >= 0.0) || !std::isfinite(v)) fail("branch length must be finite and non-negative");
    return v;
  }

  int subtree() {
    skip_ws();
    Raw node;
    if (peek() == '(') {
      ++pos_;
      while (true) {
        node.children.push_back(subtree());
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        if (peek() == ')') {
          ++pos_;
          break;
        }
        fail("expected ',' or ')'");
      }
      label();  // internal labels are accepted and dropped
    } else {
      node.label = label();
      if (node.label.empty()) fail("empty leaf label");
    }
    skip_ws();
    if (peek() == ':') {
      ++pos_;
      node.length = number();
    }
    raw_.push_back(std::move(node));
    return static_cast<int>(raw_.size()) - 1;
  }

  ClusterTree build(int root) {
    // depth of every raw node from the root, summing branch lengths
    std::vector<double> depth(raw_.size(), 0.0);
    double max_depth = 0.0;
    std::function<void(int, double)> walk = [&](int n, double d) {
      depth[static_cast<std::size_t>(n)] = d;
      max_depth = std::max(max_depth, d);
      for (int c : raw_[static_cast<std::size_t>(n)].children)
        walk(c, d + raw_[static_cast<std::size_t>(c)].length);
    };
    walk(root, 0.0);

    ClusterTree tree;
    std::function<int(int)> add = [&](int n) -> int {
      const Raw& r = raw_[static_cast<std::size_t>(n)];
      const double h = max_depth - depth[static_cast<std::size_t>(n)];
      if (r.children.empty()) return tree.add_leaf(r.label, h);
      std::vector<int> kids;
      for (int c : r.children) kids.push_back(add(c));
      return tree.add_internal(std::move(kids), h);
    };
    add(root);
    tree.validate();
    return tree;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::vector<Raw> raw_;
};

}  // namespace

std::string to_newick(const ClusterTree& tree) {
  if (tree.empty()) throw InvalidArgument("cannot serialize an empty tree");
  std::string out;
  emit(tree, tree.root(), out);
  out.push_back(';');
  return out;
}

ClusterTree parse_newick(std::string_view text) { return NewickParser(text).parse(); }

double tree_distance(const ClusterTree& a, const ClusterTree& b) {
  auto la = a.leaf_labels();
  auto lb = b.leaf_labels();
  std::sort(la.begin(), la.end());
  std::sort(lb.begin(), lb.end());
  if (la != lb) {
    std::vector<std::string> only_a, only_b;
    std::set_difference(la.begin(), la.end(), lb.begin(), lb.end(), std::back_inserter(only_a));
    std::set_difference(lb.begin(), lb.end(), la.begin(), la.end(), std::back_inserter(only_b));
    std::string msg = "leaf sets differ; only in first: {";
    for (std::size_t i = 0; i < only_a.size(); ++i) msg += (i ? "," : "") + only_a[i];
    msg += "}; only in second: {";
    for (std::size_t i = 0; i < only_b.size(); ++i) msg += (i ? "," : "") + only_b[i];
    msg += "}";
    throw InvalidArgument(msg);
  }
  const std::size_t n = la.size();
  if (n < 2) return 0.0;
  const auto da = a.leaf_path_lengths(la);
  const auto db = b.leaf_path_lengths(la);
  int max_a = 0, max_b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      max_a = std::max(max_a, da[i][j]);
      max_b = std::max(max_b, db[i][j]);
    }
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      sum += std::abs(static_cast<double>(da[i][j]) / max_a - static_cast<double>(db[i][j]) / max_b);
  return sum / static_cast<double>(n * (n - 1) / 2);
}

}  // namespace lid::analysis

namespace lid::analysis {

ClusterTree restrict_tree(const ClusterTree& tree, const std::vector<std::string>& keep) {
  std::set<std::string> wanted(keep.begin(), keep.end());
  std::set<std::string> present;
  for (int n : tree.leaf_nodes()) present.insert(tree.node(n).label);
  for (const auto& k : wanted)
    if (!present.count(k)) throw InvalidArgument("restrict_tree: leaf '" + k + "' is not in the tree");
  ClusterTree out;
  std::function<int(int)> copy = [&](int n) -> int {
    const auto& nd = tree.node(n);
    if (nd.children.empty()) return wanted.count(nd.label) ? out.add_leaf(nd.label, nd.height) : -1;
    std::vector<int> kids;
    for (int c : nd.children) {
      const int k = copy(c);
      if (k >= 0) kids.push_back(k);
    }
    if (kids.empty()) return -1;
    if (kids.size() == 1) return kids[0];
    return out.add_internal(std::move(kids), nd.height);
  };
  copy(tree.root());
  out.validate();
  return out;
}

}  // namespace lid::analysis
