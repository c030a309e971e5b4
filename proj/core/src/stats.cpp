#include "switchminer/stats.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "switchminer/error.hpp"
#include "switchminer/special_functions.hpp"

namespace switchminer::stats {

SampleSummary summarize(std::span<const double> samples) {
  SampleSummary s;
  s.n = samples.size();
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double x : samples) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : samples) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

TestResult t_test(const SampleSummary& a, const SampleSummary& b) {
  if (a.n < 2 || b.n < 2) throw InvalidInput("t_test needs at least two observations per group");
  if (a.sd < 0.0 || b.sd < 0.0) throw InvalidInput("t_test standard deviations must be nonnegative");
  TestResult r;
  const double na = static_cast<double>(a.n);
  const double nb = static_cast<double>(b.n);
  r.df = na + nb - 2.0;
  const double pooled = ((na - 1.0) * a.sd * a.sd + (nb - 1.0) * b.sd * b.sd) / r.df;
  const double diff = a.mean - b.mean;
  if (pooled == 0.0) {
    if (diff == 0.0) {
      r.statistic = 0.0;
      r.p_value = 1.0;
    } else {
      r.statistic = std::copysign(std::numeric_limits<double>::infinity(), diff);
      r.p_value = 0.0;
      r.degenerate = true;
    }
    return r;
  }
  r.statistic = diff / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  r.p_value = beta_inc(r.df / 2.0, 0.5, r.df / (r.df + r.statistic * r.statistic));
  return r;
}

TestResult t_test(std::span<const double> a, std::span<const double> b) { return t_test(summarize(a), summarize(b)); }

TestResult chi_square_test(const std::vector<std::vector<double>>& table) {
  const std::size_t rows = table.size();
  if (rows < 2) throw InvalidInput("chi-square table needs at least two rows");
  const std::size_t cols = table.front().size();
  if (cols < 2) throw InvalidInput("chi-square table needs at least two columns");
  std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (table[i].size() != cols) throw InvalidInput("chi-square table rows have different lengths");
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = table[i][j];
      if (!(v >= 0.0)) throw InvalidInput("chi-square counts must be nonnegative");
      row_sum[i] += v;
      col_sum[j] += v;
      total += v;
    }
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if (row_sum[i] == 0.0) throw InvalidInput("chi-square row " + std::to_string(i) + " has zero total");
  }
  for (std::size_t j = 0; j < cols; ++j) {
    if (col_sum[j] == 0.0) throw InvalidInput("chi-square column " + std::to_string(j) + " has zero total");
  }
  TestResult r;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double expected = row_sum[i] * col_sum[j] / total;
      const double d = table[i][j] - expected;
      r.statistic += d * d / expected;
    }
  }
  r.df = static_cast<double>((rows - 1) * (cols - 1));
  r.p_value = gamma_q(r.df / 2.0, r.statistic / 2.0);
  return r;
}

}  // namespace switchminer::stats
