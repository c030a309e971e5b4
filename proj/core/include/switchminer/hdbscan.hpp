#pragma once

#include <map>
#include <vector>

#include "switchminer/matrix.hpp"

namespace switchminer::topics {

/// Edge of the condensed tree. Ids below n are points; clusters are n, n+1, ...
/// with the root at n.
struct CondensedEdge {
  int parent = 0;
  int child = 0;
  double lambda = 0.0;  // 1 / distance at which the child leaves the parent
  int child_size = 1;
  bool operator==(const CondensedEdge&) const = default;
};

struct HdbscanOptions {
  int min_cluster_size = 5;
  int min_samples = 0;  // neighbours for the core distance; 0 → min_cluster_size
};

struct HdbscanResult {
  /// -1 for noise, otherwise 0..n_clusters-1 ordered by each cluster's smallest point index.
  std::vector<int> labels;
  int n_clusters = 0;
  std::vector<double> core_distances;
  std::vector<CondensedEdge> condensed_tree;
  std::map<int, double> stabilities;  // per condensed-tree cluster
  std::vector<int> selected;          // condensed cluster id of each label
};

/// Euclidean HDBSCAN with excess-of-mass selection (the root is never
/// selected). Fewer points than min_cluster_size gives all noise.
HdbscanResult cluster_hdbscan(const Matrix& points, const HdbscanOptions& options = {});

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace switchminer::topics
