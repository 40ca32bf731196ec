#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "treeflow/errors.hpp"

namespace treeflow {

inline constexpr std::int64_t kDefaultTreeSizeCap = 64ll * 1024 * 1024;

/// Finite rooted tree with dense integer vertex ids. Construction
/// validates acyclicity and a unique root; immutable afterwards.
/// Level n is the set of vertices at graph distance n from the root.
class RootedTree {
 public:
  /// parents[v] = parent id, root maps to itself.
  static RootedTree from_parents(std::vector<int> parents);

  /// Complete b-ary tree of the given depth, breadth-first vertex ids
  /// (so every level is a contiguous id range).
  static RootedTree bary(int b, int depth, std::int64_t size_cap = kDefaultTreeSizeCap);

  int vertex_count() const { return static_cast<int>(parent_.size()); }
  int root() const { return root_; }
  int parent(int v) const { return parent_[v]; }
  int depth(int v) const { return depth_[v]; }
  int max_depth() const { return static_cast<int>(level_off_.size()) - 2; }
  const std::vector<int>& parents() const { return parent_; }

  std::span<const int> children(int v) const {
    return {child_data_.data() + child_off_[v], child_data_.data() + child_off_[v + 1]};
  }
  int child_count(int v) const { return child_off_[v + 1] - child_off_[v]; }
  bool is_leaf(int v) const { return child_count(v) == 0; }

  /// Vertices of level n, ascending ids.
  std::span<const int> level(int n) const;
  std::int64_t level_size(int n) const { return static_cast<std::int64_t>(level(n).size()); }

  void check_vertex(int v) const {
    if (v < 0 || v >= vertex_count())
      fail(Errc::unknown_vertex, "vertex " + std::to_string(v) + " out of range");
  }

 private:
  RootedTree() = default;
  void build_derived();

  int root_ = 0;
  std::vector<int> parent_;
  std::vector<int> depth_;
  std::vector<int> child_data_;   // CSR child lists
  std::vector<int> child_off_;    // size V+1
  std::vector<int> level_order_;  // vertices sorted by (depth, id)
  std::vector<int> level_off_;    // size max_depth+2
};

/// Deepest common ancestor of x and y.
int meet(const RootedTree& tree, int x, int y);

/// True iff every root-to-leaf path meets W.
bool is_cutset(const RootedTree& tree, std::span<const int> w);

/// True iff no member of W is an ancestor of another.
bool is_antichain(const RootedTree& tree, std::span<const int> w);

std::string tree_to_json(const RootedTree& tree);
RootedTree tree_from_json(const std::string& text);

}  // namespace treeflow
