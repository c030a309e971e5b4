#include "switchminer/pca.hpp"

#include <algorithm>
#include <cmath>

#include "switchminer/error.hpp"
#include "switchminer/random.hpp"

namespace switchminer::topics {

double PcaResult::captured_variance() const {
  double s = 0.0;
  for (double e : eigenvalues) s += e;
  return s;
}

PcaResult reduce_pca(const Matrix& x, std::size_t d, const PcaOptions& options) {
  if (d == 0) throw InvalidInput("reduce_pca: d must be positive");
  if (x.rows < d) {
    throw InvalidInput("reduce_pca: need at least d=" + std::to_string(d) + " rows, got " + std::to_string(x.rows));
  }
  const std::size_t n = x.rows;
  const std::size_t D = x.cols;
  PcaResult out;
  out.mean.assign(D, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < D; ++c) out.mean[c] += x(i, c);
  }
  for (double& m : out.mean) m /= static_cast<double>(n);

  Matrix cov(D, D);
  std::vector<double> centred(D);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < D; ++c) centred[c] = x(i, c) - out.mean[c];
    for (std::size_t a = 0; a < D; ++a) {
      if (centred[a] == 0.0) continue;
      for (std::size_t b = a; b < D; ++b) cov(a, b) += centred[a] * centred[b];
    }
  }
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  for (std::size_t a = 0; a < D; ++a) {
    for (std::size_t b = a; b < D; ++b) {
      cov(a, b) /= denom;
      cov(b, a) = cov(a, b);
    }
    out.total_variance += cov(a, a);
  }

  out.components = Matrix(d, D);
  out.eigenvalues.assign(d, 0.0);
  const double negligible = std::max(out.total_variance, 1.0) * 1e-13;
  Rng rng(0x5eed);
  std::vector<double> v(D), w(D);
  bool rank_warned = false;
  for (std::size_t k = 0; k < std::min(d, D); ++k) {
    double start_norm = 0.0;
    for (double& e : v) {
      e = rng.uniform(-1.0, 1.0);
      start_norm += e * e;
    }
    for (double& e : v) e /= std::sqrt(start_norm);
    double lambda = 0.0;
    bool converged = false;
    for (int it = 0; it < options.max_iterations; ++it) {
      for (std::size_t a = 0; a < D; ++a) {
        double s = 0.0;
        for (std::size_t b = 0; b < D; ++b) s += cov(a, b) * v[b];
        w[a] = s;
      }
      double norm = 0.0;
      for (double e : w) norm += e * e;
      norm = std::sqrt(norm);
      if (norm <= negligible) {
        lambda = 0.0;
        converged = true;
        break;
      }
      double change = 0.0;
      for (std::size_t a = 0; a < D; ++a) {
        w[a] /= norm;
        change = std::max(change, std::abs(w[a] - v[a]));
      }
      v.swap(w);
      lambda = norm;
      if (change < options.tolerance) {
        converged = true;
        break;
      }
    }
    if (lambda <= negligible) {
      if (!rank_warned) {
        out.warnings.push_back("requested " + std::to_string(d) + " components but the data has rank " +
                               std::to_string(k) + "; remaining components are zero");
        rank_warned = true;
      }
      continue;
    }
    if (!converged) {
      out.warnings.push_back("component " + std::to_string(k + 1) + " did not converge within " +
                             std::to_string(options.max_iterations) + " iterations");
    }
    // Rayleigh quotient for the eigenvalue.
    double rq = 0.0;
    for (std::size_t a = 0; a < D; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < D; ++b) s += cov(a, b) * v[b];
      rq += v[a] * s;
    }
    std::size_t big = 0;
    for (std::size_t a = 1; a < D; ++a) {
      if (std::abs(v[a]) > std::abs(v[big])) big = a;
    }
    if (v[big] < 0) {
      for (double& e : v) e = -e;
    }
    for (std::size_t a = 0; a < D; ++a) out.components(k, a) = v[a];
    out.eigenvalues[k] = rq;
    ++out.rank;
    for (std::size_t a = 0; a < D; ++a) {
      for (std::size_t b = 0; b < D; ++b) cov(a, b) -= rq * v[a] * v[b];
    }
  }
  if (d > D && !rank_warned) {
    out.warnings.push_back("requested " + std::to_string(d) + " components but the data has only " +
                           std::to_string(D) + " dimensions; remaining components are zero");
  }
  out.projected = project(out, x);
  return out;
}

Matrix project(const PcaResult& fit, const Matrix& x) {
  if (x.cols != fit.mean.size()) throw InvalidInput("project: dimension mismatch");
  Matrix out(x.rows, fit.components.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t k = 0; k < fit.components.rows; ++k) {
      double s = 0.0;
      for (std::size_t c = 0; c < x.cols; ++c) s += (x(i, c) - fit.mean[c]) * fit.components(k, c);
      out(i, k) = s;
    }
  }
  return out;
}

}  // namespace switchminer::topics
