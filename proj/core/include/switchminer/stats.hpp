#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace switchminer::stats {

struct TestResult {
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  /// Set when the statistic is infinite (zero variance with different means).
  bool degenerate = false;
};

struct SampleSummary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n - 1 denominator)
  std::size_t n = 0;
};

SampleSummary summarize(std::span<const double> samples);

/// Two-sample Student's t-test with pooled variance, two-sided p.
/// Throws InvalidInput when a group has fewer than two observations or sd < 0.
TestResult t_test(const SampleSummary& a, const SampleSummary& b);
TestResult t_test(std::span<const double> a, std::span<const double> b);

/// Pearson chi-square test of independence, no continuity correction.
/// Throws InvalidInput for tables smaller than 2x2, ragged rows, negative
/// counts or a zero row/column total (the message names it).
TestResult chi_square_test(const std::vector<std::vector<double>>& table);

}  // namespace switchminer::stats
