#pragma once

#include <string>
#include <vector>

#include "switchminer/matrix.hpp"

namespace switchminer::topics {

struct PcaOptions {
  double tolerance = 1e-10;
  int max_iterations = 20000;
};

struct PcaResult {
  Matrix projected;   // n × d
  Matrix components;  // d × D, unit rows (zero rows beyond the rank)
  std::vector<double> mean;
  std::vector<double> eigenvalues;  // d
  double total_variance = 0.0;
  std::size_t rank = 0;  // components with a nonzero eigenvalue
  std::vector<std::string> warnings;

  [[nodiscard]] double captured_variance() const;
};

/// Mean-centred projection onto the top-d covariance eigenvectors found by
/// power iteration with deflation. Each component's largest-magnitude entry
/// is positive. Requires rows >= d.
PcaResult reduce_pca(const Matrix& x, std::size_t d = 5, const PcaOptions& options = {});

/// Projects new rows with a fitted result.
Matrix project(const PcaResult& fit, const Matrix& x);

}  // namespace switchminer::topics
