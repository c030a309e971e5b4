#include "switchminer/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <thread>

#include "switchminer/error.hpp"
#include "switchminer/hashing.hpp"
#include "switchminer/random.hpp"

namespace switchminer::baselines {

namespace {

std::size_t argmax_first(const std::vector<int>& counts) {
  return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

double gini(const std::vector<int>& counts, int total) {
  if (total == 0) return 0.0;
  double s = 0.0;
  for (int c : counts) {
    const double p = static_cast<double>(c) / total;
    s += p * p;
  }
  return 1.0 - s;
}

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<float>& x, std::size_t n_features, const std::vector<int>& y, std::size_t n_labels,
              int max_depth, Rng& rng)
      : x_(x), v_(n_features), y_(y), n_labels_(n_labels), max_depth_(max_depth), rng_(rng) {
    candidates_ = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(v_))));
  }

  DecisionTree build(std::vector<std::size_t> samples) {
    DecisionTree tree;
    grow(tree, samples, 0);
    return tree;
  }

 private:
  float at(std::size_t sample, std::size_t feature) const { return x_[sample * v_ + feature]; }

  int grow(DecisionTree& tree, std::vector<std::size_t>& samples, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    std::vector<int> counts(n_labels_, 0);
    for (auto s : samples) ++counts[static_cast<std::size_t>(y_[s])];
    tree.nodes[static_cast<std::size_t>(id)].counts = counts;
    const bool pure = std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; }) <= 1;
    if (pure || depth >= max_depth_ || samples.size() < 2) return id;

    // Candidate features without replacement; constant features do not count
    // towards the quota, so a split is found whenever one exists.
    std::vector<std::size_t> order(v_);
    std::iota(order.begin(), order.end(), 0);
    std::size_t evaluated = 0;
    int best_feature = -1;
    double best_threshold = 0.0;
    double best_impurity = std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(samples.size());
    std::vector<std::pair<float, int>> column(samples.size());
    for (std::size_t k = 0; k < v_ && evaluated < candidates_; ++k) {
      std::swap(order[k], order[k + rng_.below(v_ - k)]);
      const std::size_t f = order[k];
      for (std::size_t i = 0; i < samples.size(); ++i) column[i] = {at(samples[i], f), y_[samples[i]]};
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;
      ++evaluated;
      std::vector<int> left(n_labels_, 0);
      std::vector<int> right = counts;
      for (int i = 0; i + 1 < n; ++i) {
        ++left[static_cast<std::size_t>(column[static_cast<std::size_t>(i)].second)];
        --right[static_cast<std::size_t>(column[static_cast<std::size_t>(i)].second)];
        const float a = column[static_cast<std::size_t>(i)].first;
        const float b = column[static_cast<std::size_t>(i) + 1].first;
        if (a == b) continue;
        const int nl = i + 1;
        const int nr = n - nl;
        const double impurity = (nl * gini(left, nl) + nr * gini(right, nr)) / n;
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (static_cast<double>(a) + static_cast<double>(b));
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left_samples, right_samples;
    for (auto s : samples) {
      (at(s, static_cast<std::size_t>(best_feature)) <= best_threshold ? left_samples : right_samples).push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();
    const int l = grow(tree, left_samples, depth + 1);
    const int r = grow(tree, right_samples, depth + 1);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  const std::vector<float>& x_;
  std::size_t v_;
  const std::vector<int>& y_;
  std::size_t n_labels_;
  int max_depth_;
  Rng& rng_;
  std::size_t candidates_ = 1;
};

std::vector<float> densify(const SparseRow& row, int n_features) {
  std::vector<float> d(static_cast<std::size_t>(n_features), 0.0F);
  for (const auto& [j, v] : row.entries) {
    if (j >= 0 && j < n_features) d[static_cast<std::size_t>(j)] = static_cast<float>(v);
  }
  return d;
}

}  // namespace

const TreeNode& DecisionTree::leaf_for(const std::vector<float>& dense) const {
  const TreeNode* node = &nodes.front();
  while (node->feature >= 0) {
    node = &nodes[static_cast<std::size_t>(dense[static_cast<std::size_t>(node->feature)] <= node->threshold
                                               ? node->left
                                               : node->right)];
  }
  return *node;
}

ForestModel train_random_forest(const FeatureMatrix& x, const std::vector<std::string>& labels,
                                const ForestOptions& options) {
  const std::set<std::string> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) throw InvalidInput("random forest: training data needs at least two distinct labels");
  if (labels.size() != x.n_rows()) throw InvalidInput("random forest: label count does not match row count");
  if (options.n_estimators < 1 || options.max_depth < 1) {
    throw InvalidInput("random forest: n_estimators and max_depth must be positive");
  }
  if (x.n_features < 1) throw InvalidInput("random forest: no features");
  ForestModel model;
  model.labels.assign(distinct.begin(), distinct.end());
  model.n_features = x.n_features;
  model.options = options;

  const std::size_t n = x.n_rows();
  const std::size_t v = static_cast<std::size_t>(x.n_features);
  std::vector<float> dense(n * v, 0.0F);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, w] : x.rows[i].entries) dense[i * v + static_cast<std::size_t>(j)] = static_cast<float>(w);
  }
  std::vector<int> y;
  for (const auto& l : labels) {
    y.push_back(static_cast<int>(std::lower_bound(model.labels.begin(), model.labels.end(), l) - model.labels.begin()));
  }

  model.trees.resize(static_cast<std::size_t>(options.n_estimators));
  auto build_tree = [&](std::size_t t) {
    Rng rng(derive_seed(options.seed, "tree#" + std::to_string(t)));
    std::vector<std::size_t> bootstrap(n);
    for (auto& s : bootstrap) s = rng.below(n);
    TreeBuilder builder(dense, v, y, model.labels.size(), options.max_depth, rng);
    model.trees[t] = builder.build(std::move(bootstrap));
  };
  // Each tree has its own seed, so the result does not depend on the thread count.
  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, model.trees.size());
  if (workers == 1) {
    for (std::size_t t = 0; t < model.trees.size(); ++t) build_tree(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < model.trees.size(); t = next++) build_tree(t);
      });
    }
  }
  return model;
}

std::string ForestModel::predict(const SparseRow& row) const {
  const auto dense = densify(row, n_features);
  std::vector<int> votes(labels.size(), 0);
  for (const auto& tree : trees) ++votes[argmax_first(tree.leaf_for(dense).counts)];
  return labels[argmax_first(votes)];
}

std::vector<std::string> ForestModel::predict(const FeatureMatrix& x) const {
  std::vector<std::string> out;
  out.reserve(x.n_rows());
  for (const auto& r : x.rows) out.push_back(predict(r));
  return out;
}

}  // namespace switchminer::baselines
