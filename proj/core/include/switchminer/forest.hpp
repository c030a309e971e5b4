#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "switchminer/features.hpp"

namespace switchminer::baselines {

struct ForestOptions {
  int n_estimators = 100;
  int max_depth = 20;
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  std::vector<int> counts;  // label counts of the training samples reaching the node
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  [[nodiscard]] const TreeNode& leaf_for(const std::vector<float>& dense) const;
};

struct ForestModel {
  std::vector<std::string> labels;  // sorted
  int n_features = 0;
  ForestOptions options;
  std::vector<DecisionTree> trees;

  /// Majority vote over trees; ties go to the smallest label.
  [[nodiscard]] std::string predict(const SparseRow& row) const;
  [[nodiscard]] std::vector<std::string> predict(const FeatureMatrix& x) const;
};

/// Bootstrap-aggregated Gini trees with ⌈√V⌉ candidate features per split.
/// Throws InvalidInput when fewer than two distinct labels are present.
ForestModel train_random_forest(const FeatureMatrix& x, const std::vector<std::string>& labels,
                                const ForestOptions& options);

}  // namespace switchminer::baselines
