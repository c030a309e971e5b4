#pragma once

#include <string>
#include <vector>

#include "switchminer/features.hpp"

namespace switchminer::baselines {

struct LogregOptions {
  double tolerance = 1e-6;  // on the gradient ∞-norm
  int max_iterations = 5000;
};

/// Multinomial softmax regression. Parameters are laid out as W (V×L,
/// row-major) followed by the bias (L).
struct LogregModel {
  std::vector<std::string> labels;  // sorted
  int n_features = 0;
  double C = 1.0;
  std::vector<double> weights;  // V×L
  std::vector<double> bias;     // L
  int iterations = 0;
  double final_gradient_norm = 0.0;
  std::vector<double> objective_trace;  // one value per accepted step, starting at the initial point

  [[nodiscard]] std::vector<double> predict_proba(const SparseRow& row) const;
  /// Argmax label; ties go to the smallest label.
  [[nodiscard]] std::string predict(const SparseRow& row) const;
  [[nodiscard]] std::vector<std::string> predict(const FeatureMatrix& x) const;
  /// Frobenius norm of W.
  [[nodiscard]] double weight_norm() const;
};

/// The training objective: Σ cross-entropy + ‖W‖² / (2C), bias unpenalized.
class LogregObjective {
 public:
  LogregObjective(const FeatureMatrix& x, std::vector<int> y, int n_labels, double C);

  [[nodiscard]] std::size_t n_params() const;
  /// Returns the objective and, when `gradient` is non-null, writes its gradient.
  double operator()(const std::vector<double>& params, std::vector<double>* gradient) const;

 private:
  const FeatureMatrix& x_;
  std::vector<int> y_;
  int n_labels_;
  double C_;
};

/// Full-batch limited-memory quasi-Newton descent (L-BFGS directions) with
/// monotone Armijo backtracking from a zero start.
/// Throws InvalidInput when fewer than two distinct labels are present.
LogregModel train_logreg(const FeatureMatrix& x, const std::vector<std::string>& labels, double C,
                         const LogregOptions& options = {});

}  // namespace switchminer::baselines
