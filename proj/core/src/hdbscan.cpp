#include "switchminer/hdbscan.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <set>

#include "switchminer/error.hpp"

namespace switchminer::topics {

namespace {

double distance(const Matrix& x, std::size_t a, std::size_t b) {
  double s = 0.0;
  for (std::size_t c = 0; c < x.cols; ++c) {
    const double d = x(a, c) - x(b, c);
    s += d * d;
  }
  return std::sqrt(s);
}

struct MstEdge {
  int a;
  int b;
  double weight;
};

struct Dendrogram {
  // Node ids: points 0..n-1, merges n..2n-2.
  std::vector<int> left, right, size;
  std::vector<double> dist;
  int n = 0;

  [[nodiscard]] int count(int node) const { return node < n ? 1 : size[static_cast<std::size_t>(node - n)]; }
};

std::vector<int> subtree_points(const Dendrogram& t, int node) {
  std::vector<int> out;
  std::vector<int> stack = {node};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    if (cur < t.n) {
      out.push_back(cur);
    } else {
      stack.push_back(t.left[static_cast<std::size_t>(cur - t.n)]);
      stack.push_back(t.right[static_cast<std::size_t>(cur - t.n)]);
    }
  }
  return out;
}

}  // namespace

HdbscanResult cluster_hdbscan(const Matrix& points, const HdbscanOptions& options) {
  if (options.min_cluster_size < 2) throw InvalidInput("hdbscan: min_cluster_size must be >= 2");
  const int n = static_cast<int>(points.rows);
  HdbscanResult out;
  out.labels.assign(static_cast<std::size_t>(n), -1);
  if (n == 0) throw InvalidInput("hdbscan: no points");
  const int mcs = options.min_cluster_size;
  if (n < mcs) return out;
  const int k = std::min(options.min_samples > 0 ? options.min_samples : mcs, n);

  // Core distances: distance to the k-th nearest neighbour, the point itself included.
  out.core_distances.resize(static_cast<std::size_t>(n));
  std::vector<double> row(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = distance(points, i, j);
    std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
    out.core_distances[static_cast<std::size_t>(i)] = row[static_cast<std::size_t>(k - 1)];
  }
  const auto& core = out.core_distances;

  // Prim's algorithm on the complete mutual-reachability graph.
  std::vector<MstEdge> mst;
  mst.reserve(static_cast<std::size_t>(n - 1));
  std::vector<bool> in_tree(static_cast<std::size_t>(n), false);
  std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<int> from(static_cast<std::size_t>(n), -1);
  int current = 0;
  in_tree[0] = true;
  for (int step = 1; step < n; ++step) {
    int next = -1;
    for (int j = 0; j < n; ++j) {
      if (in_tree[static_cast<std::size_t>(j)]) continue;
      const double mr = std::max({core[static_cast<std::size_t>(current)], core[static_cast<std::size_t>(j)],
                                  distance(points, current, j)});
      if (mr < best[static_cast<std::size_t>(j)]) {
        best[static_cast<std::size_t>(j)] = mr;
        from[static_cast<std::size_t>(j)] = current;
      }
      if (next < 0 || best[static_cast<std::size_t>(j)] < best[static_cast<std::size_t>(next)]) next = j;
    }
    in_tree[static_cast<std::size_t>(next)] = true;
    mst.push_back({from[static_cast<std::size_t>(next)], next, best[static_cast<std::size_t>(next)]});
    current = next;
  }
  std::stable_sort(mst.begin(), mst.end(), [](const MstEdge& a, const MstEdge& b) { return a.weight < b.weight; });

  // Single-linkage dendrogram via union-find.
  Dendrogram tree;
  tree.n = n;
  std::vector<int> parent(static_cast<std::size_t>(2 * n - 1));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (std::size_t e = 0; e < mst.size(); ++e) {
    const int ra = find(mst[e].a);
    const int rb = find(mst[e].b);
    const int node = n + static_cast<int>(e);
    tree.left.push_back(ra);
    tree.right.push_back(rb);
    tree.dist.push_back(mst[e].weight);
    tree.size.push_back(tree.count(ra) + tree.count(rb));
    parent[static_cast<std::size_t>(ra)] = node;
    parent[static_cast<std::size_t>(rb)] = node;
  }

  // Condense: walk top-down, keeping a cluster id while the larger side stays
  // above min_cluster_size and ejecting points from undersized sides.
  const int root = 2 * n - 2;
  std::vector<int> relabel(static_cast<std::size_t>(2 * n - 1), -1);
  std::vector<bool> ignore(static_cast<std::size_t>(2 * n - 1), false);
  int next_label = n + 1;
  relabel[static_cast<std::size_t>(root)] = n;
  std::deque<int> queue = {root};
  auto eject = [&](int node, int cluster, double lambda) {
    for (int p : subtree_points(tree, node)) out.condensed_tree.push_back({cluster, p, lambda, 1});
    std::vector<int> stack = {node};
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      ignore[static_cast<std::size_t>(cur)] = true;
      if (cur >= n) {
        stack.push_back(tree.left[static_cast<std::size_t>(cur - n)]);
        stack.push_back(tree.right[static_cast<std::size_t>(cur - n)]);
      }
    }
  };
  while (!queue.empty()) {
    const int node = queue.front();
    queue.pop_front();
    if (node < n || ignore[static_cast<std::size_t>(node)]) continue;
    const int l = tree.left[static_cast<std::size_t>(node - n)];
    const int r = tree.right[static_cast<std::size_t>(node - n)];
    queue.push_back(l);
    queue.push_back(r);
    const double lambda = 1.0 / std::max(tree.dist[static_cast<std::size_t>(node - n)], 1e-12);
    const int cluster = relabel[static_cast<std::size_t>(node)];
    const int lc = tree.count(l);
    const int rc = tree.count(r);
    if (lc >= mcs && rc >= mcs) {
      relabel[static_cast<std::size_t>(l)] = next_label++;
      out.condensed_tree.push_back({cluster, relabel[static_cast<std::size_t>(l)], lambda, lc});
      relabel[static_cast<std::size_t>(r)] = next_label++;
      out.condensed_tree.push_back({cluster, relabel[static_cast<std::size_t>(r)], lambda, rc});
    } else if (lc < mcs && rc < mcs) {
      eject(l, cluster, lambda);
      eject(r, cluster, lambda);
    } else if (lc < mcs) {
      relabel[static_cast<std::size_t>(r)] = cluster;
      eject(l, cluster, lambda);
    } else {
      relabel[static_cast<std::size_t>(l)] = cluster;
      eject(r, cluster, lambda);
    }
  }

  // Stability of each cluster: Σ (λ_leave − λ_birth) · size over its children.
  std::map<int, double> birth;
  birth[n] = 0.0;
  for (const auto& e : out.condensed_tree) {
    if (e.child >= n) birth[e.child] = e.lambda;
  }
  for (const auto& [c, b] : birth) out.stabilities[c] = 0.0;
  std::map<int, std::vector<int>> cluster_children;
  std::map<int, int> parent_of;
  for (const auto& e : out.condensed_tree) {
    out.stabilities[e.parent] += (e.lambda - birth[e.parent]) * e.child_size;
    parent_of[e.child] = e.parent;
    if (e.child >= n) cluster_children[e.parent].push_back(e.child);
  }

  // Excess-of-mass selection, children before parents, root excluded.
  std::map<int, double> propagated = out.stabilities;
  std::set<int> selected;
  for (auto it = propagated.rbegin(); it != propagated.rend(); ++it) {
    const int c = it->first;
    if (c == n) continue;
    double subtree = 0.0;
    for (int child : cluster_children[c]) subtree += propagated[child];
    if (subtree > it->second) {
      it->second = subtree;
    } else {
      std::vector<int> stack(cluster_children[c].begin(), cluster_children[c].end());
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        selected.erase(cur);
        for (int g : cluster_children[cur]) stack.push_back(g);
      }
      selected.insert(c);
    }
  }

  // A point belongs to the first selected cluster above it.
  std::vector<int> raw(static_cast<std::size_t>(n), -1);
  for (int p = 0; p < n; ++p) {
    auto it = parent_of.find(p);
    if (it == parent_of.end()) continue;
    int c = it->second;
    while (c != n && !selected.contains(c)) c = parent_of.at(c);
    if (selected.contains(c)) raw[static_cast<std::size_t>(p)] = c;
  }
  std::map<int, int> first_member;
  for (int p = 0; p < n; ++p) {
    if (raw[static_cast<std::size_t>(p)] >= 0) first_member.emplace(raw[static_cast<std::size_t>(p)], p);
  }
  std::vector<std::pair<int, int>> order;  // (smallest point, cluster)
  for (const auto& [c, p] : first_member) order.emplace_back(p, c);
  std::sort(order.begin(), order.end());
  std::map<int, int> label_of;
  for (const auto& [p, c] : order) {
    label_of[c] = static_cast<int>(out.selected.size());
    out.selected.push_back(c);
  }
  for (int p = 0; p < n; ++p) {
    if (raw[static_cast<std::size_t>(p)] >= 0) out.labels[static_cast<std::size_t>(p)] = label_of[raw[static_cast<std::size_t>(p)]];
  }
  out.n_clusters = static_cast<int>(out.selected.size());
  return out;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw InvalidInput("adjusted_rand_index: length mismatch");
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1;
    ra[a[i]] += 1;
    rb[b[i]] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double index = 0, sa = 0, sb = 0;
  for (const auto& [k, v] : table) index += c2(v);
  for (const auto& [k, v] : ra) sa += c2(v);
  for (const auto& [k, v] : rb) sb += c2(v);
  const double total = c2(static_cast<double>(a.size()));
  if (total == 0) return 1.0;
  const double expected = sa * sb / total;
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace switchminer::topics
