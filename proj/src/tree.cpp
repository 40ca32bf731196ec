#include "treeflow/tree.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"

namespace treeflow {

RootedTree RootedTree::from_parents(std::vector<int> parents) {
  const int n = static_cast<int>(parents.size());
  require(n >= 1, Errc::bad_config, "empty vertex set");
  RootedTree t;
  t.parent_ = std::move(parents);
  int root = -1;
  for (int v = 0; v < n; ++v) {
    require(t.parent_[v] >= 0 && t.parent_[v] < n, Errc::disconnected,
            "parent of " + std::to_string(v) + " out of range");
    if (t.parent_[v] == v) {
      require(root == -1, Errc::multiple_roots, "vertices " + std::to_string(root) + " and " +
                                                    std::to_string(v) + " are both roots");
      root = v;
    }
  }
  require(root != -1, Errc::cycle, "no self-rooted vertex");
  t.root_ = root;

  // Depths via path compression; visiting a vertex twice in one walk is a cycle.
  t.depth_.assign(n, -1);
  t.depth_[root] = 0;
  std::vector<int> chain;
  for (int v = 0; v < n; ++v) {
    if (t.depth_[v] >= 0) continue;
    chain.clear();
    int u = v;
    while (t.depth_[u] < 0) {
      chain.push_back(u);
      u = t.parent_[u];
      require(static_cast<int>(chain.size()) <= n, Errc::cycle, "parent chain does not terminate");
      for (int seen : chain)
        require(seen != u, Errc::cycle, "cycle through vertex " + std::to_string(u));
    }
    int d = t.depth_[u];
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) t.depth_[*it] = ++d;
  }
  t.build_derived();
  return t;
}

RootedTree RootedTree::bary(int b, int depth, std::int64_t size_cap) {
  require(b >= 1, Errc::out_of_range, "b must be >= 1");
  require(depth >= 0, Errc::out_of_range, "depth must be >= 0");
  std::int64_t total = 1, level = 1;
  for (int d = 0; d < depth; ++d) {
    level *= b;
    total += level;
    require(total <= size_cap, Errc::size_cap, "b^n exceeds the size cap");
  }
  RootedTree t;
  t.root_ = 0;
  t.parent_.resize(static_cast<std::size_t>(total));
  t.depth_.resize(static_cast<std::size_t>(total));
  t.parent_[0] = 0;
  t.depth_[0] = 0;
  // Breadth-first ids: children of v are b*v+1 .. b*v+b.
  for (std::int64_t v = 1; v < total; ++v) {
    t.parent_[v] = static_cast<int>((v - 1) / b);
    t.depth_[v] = t.depth_[t.parent_[v]] + 1;
  }
  t.build_derived();
  return t;
}

void RootedTree::build_derived() {
  const int n = vertex_count();
  int max_d = 0;
  for (int v = 0; v < n; ++v) max_d = std::max(max_d, depth_[v]);

  child_off_.assign(n + 1, 0);
  for (int v = 0; v < n; ++v)
    if (v != root_) ++child_off_[parent_[v] + 1];
  for (int v = 0; v < n; ++v) child_off_[v + 1] += child_off_[v];
  child_data_.resize(n - 1);
  std::vector<int> cursor(child_off_.begin(), child_off_.end() - 1);
  for (int v = 0; v < n; ++v)
    if (v != root_) child_data_[cursor[parent_[v]]++] = v;

  level_off_.assign(max_d + 2, 0);
  for (int v = 0; v < n; ++v) ++level_off_[depth_[v] + 1];
  for (int d = 0; d <= max_d; ++d) level_off_[d + 1] += level_off_[d];
  level_order_.resize(n);
  std::vector<int> lcur(level_off_.begin(), level_off_.end() - 1);
  for (int v = 0; v < n; ++v) level_order_[lcur[depth_[v]]++] = v;  // ascending ids per level
}

std::span<const int> RootedTree::level(int n) const {
  require(n >= 0 && n <= max_depth(), Errc::unknown_vertex,
          "level " + std::to_string(n) + " beyond tree depth");
  return {level_order_.data() + level_off_[n], level_order_.data() + level_off_[n + 1]};
}

int meet(const RootedTree& tree, int x, int y) {
  tree.check_vertex(x);
  tree.check_vertex(y);
  while (tree.depth(x) > tree.depth(y)) x = tree.parent(x);
  while (tree.depth(y) > tree.depth(x)) y = tree.parent(y);
  while (x != y) {
    x = tree.parent(x);
    y = tree.parent(y);
  }
  return x;
}

bool is_cutset(const RootedTree& tree, std::span<const int> w) {
  std::vector<char> in_w(tree.vertex_count(), 0);
  for (int v : w) {
    tree.check_vertex(v);
    in_w[v] = 1;
  }
  // A vertex is clean if its whole root path (inclusive) avoids W; the
  // set fails to cut iff some leaf is clean.
  std::vector<char> clean(tree.vertex_count(), 0);
  int root = tree.root();
  clean[root] = !in_w[root];
  for (int n = 1; n <= tree.max_depth(); ++n)
    for (int v : tree.level(n)) clean[v] = clean[tree.parent(v)] && !in_w[v];
  for (int v = 0; v < tree.vertex_count(); ++v)
    if (tree.is_leaf(v) && clean[v]) return false;
  return true;
}

bool is_antichain(const RootedTree& tree, std::span<const int> w) {
  std::vector<char> in_w(tree.vertex_count(), 0);
  for (int v : w) {
    tree.check_vertex(v);
    in_w[v] = 1;
  }
  for (int v : w) {
    for (int u = v; u != tree.root(); ) {
      u = tree.parent(u);
      if (in_w[u]) return false;
    }
  }
  return true;
}

std::string tree_to_json(const RootedTree& tree) {
  nlohmann::json j;
  j["parents"] = tree.parents();
  return j.dump();
}

RootedTree tree_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, true, true);
  if (j.contains("bary")) {
    const auto& spec = j.at("bary");
    return RootedTree::bary(spec.at("b").get<int>(), spec.at("n").get<int>());
  }
  return RootedTree::from_parents(j.at("parents").get<std::vector<int>>());
}

}  // namespace treeflow
