#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lid::analysis {

// Rooted tree with labelled leaves and a height per node.  Agglomerative
// clustering produces binary trees; parsed reference trees may contain
// multifurcations.  Branch length of a node = parent height - node height.
class ClusterTree {
 public:
  struct Node {
    std::string label;          // empty for internal nodes
    std::vector<int> children;  // empty for leaves
    double height = 0.0;
    int parent = -1;
  };

  int add_leaf(std::string label, double height = 0.0);
  // The new node becomes the root until another internal node adopts it.
  int add_internal(std::vector<int> children, double height);

  int root() const { return root_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
  std::size_t leaf_count() const;
  bool empty() const { return nodes_.empty(); }

  // Leaf labels in left-to-right (depth-first) order.
  std::vector<std::string> leaf_labels() const;
  // Node index of every leaf in depth-first order.
  std::vector<int> leaf_nodes() const;
  // Nodes from root to the given node, inclusive.
  std::vector<int> path_from_root(int node) const;

  bool is_binary() const;
  // Throws InvalidArgument unless: single root, unique non-empty leaf labels,
  // heights non-decreasing toward the root.
  void validate() const;

  // Unit-edge path length between every pair of leaves, indexed in the
  // order of `labels`.
  std::vector<std::vector<int>> leaf_path_lengths(const std::vector<std::string>& labels) const;

 private:
  std::vector<Node> nodes_;
  int root_ = -1;
};

std::string to_newick(const ClusterTree& tree);
// Accepts optional branch lengths (missing lengths read as 1), quoted labels
// and whitespace.  Heights are assigned so that the root sits at the maximum
// root-to-leaf distance.
ClusterTree parse_newick(std::string_view text);

// Unweighted tree distance: every edge counts 1; per tree, leaf-pair path
// lengths are divided by that tree's largest leaf-pair path length; the
// result is the mean absolute difference over all unordered leaf pairs.
double tree_distance(const ClusterTree& a, const ClusterTree& b);

// Keeps only the listed leaves; internal nodes left with one child are
// dissolved.  Every listed leaf must be present.
ClusterTree restrict_tree(const ClusterTree& tree, const std::vector<std::string>& keep);

// Label of every leaf in the subtree under `node`.
std::vector<std::string> subtree_labels(const ClusterTree& tree, int node);

}  // namespace lid::analysis
