#include "switchminer/logreg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>

#include "switchminer/error.hpp"

namespace switchminer::baselines {

namespace {

void softmax_in_place(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    s += v;
  }
  for (double& v : z) v /= s;
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

constexpr std::size_t kHistory = 10;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

LogregObjective::LogregObjective(const FeatureMatrix& x, std::vector<int> y, int n_labels, double C)
    : x_(x), y_(std::move(y)), n_labels_(n_labels), C_(C) {
  if (y_.size() != x_.n_rows()) throw InvalidInput("logreg: label count does not match row count");
  if (!(C_ > 0.0)) throw InvalidInput("logreg: C must be positive");
}

std::size_t LogregObjective::n_params() const {
  return static_cast<std::size_t>(x_.n_features + 1) * static_cast<std::size_t>(n_labels_);
}

double LogregObjective::operator()(const std::vector<double>& params, std::vector<double>* gradient) const {
  const std::size_t L = static_cast<std::size_t>(n_labels_);
  const std::size_t bias_offset = static_cast<std::size_t>(x_.n_features) * L;
  if (gradient) gradient->assign(params.size(), 0.0);
  double loss = 0.0;
  std::vector<double> z(L);
  for (std::size_t i = 0; i < x_.n_rows(); ++i) {
    for (std::size_t l = 0; l < L; ++l) z[l] = params[bias_offset + l];
    for (const auto& [j, v] : x_.rows[i].entries) {
      const double* w = &params[static_cast<std::size_t>(j) * L];
      for (std::size_t l = 0; l < L; ++l) z[l] += w[l] * v;
    }
    const std::size_t yi = static_cast<std::size_t>(y_[i]);
    // log-sum-exp for a stable cross-entropy
    const double m = *std::max_element(z.begin(), z.end());
    const double zy = z[yi];
    double s = 0.0;
    for (double& v : z) {
      v = std::exp(v - m);
      s += v;
    }
    loss += m + std::log(s) - zy;
    if (!gradient) continue;
    for (double& v : z) v /= s;
    z[yi] -= 1.0;
    for (const auto& [j, v] : x_.rows[i].entries) {
      double* g = &(*gradient)[static_cast<std::size_t>(j) * L];
      for (std::size_t l = 0; l < L; ++l) g[l] += z[l] * v;
    }
    for (std::size_t l = 0; l < L; ++l) (*gradient)[bias_offset + l] += z[l];
  }
  double reg = 0.0;
  for (std::size_t k = 0; k < bias_offset; ++k) {
    reg += params[k] * params[k];
    if (gradient) (*gradient)[k] += params[k] / C_;
  }
  return loss + reg / (2.0 * C_);
}

LogregModel train_logreg(const FeatureMatrix& x, const std::vector<std::string>& labels, double C,
                         const LogregOptions& options) {
  const std::set<std::string> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) throw InvalidInput("logreg: training data needs at least two distinct labels");
  LogregModel model;
  model.labels.assign(distinct.begin(), distinct.end());
  model.n_features = x.n_features;
  model.C = C;
  std::vector<int> y;
  y.reserve(labels.size());
  for (const auto& l : labels) {
    y.push_back(static_cast<int>(std::lower_bound(model.labels.begin(), model.labels.end(), l) - model.labels.begin()));
  }
  const int L = static_cast<int>(model.labels.size());
  const LogregObjective objective(x, std::move(y), L, C);

  const std::size_t n = objective.n_params();
  std::vector<double> params(n, 0.0);
  std::vector<double> grad;
  double f = objective(params, &grad);
  model.objective_trace.push_back(f);
  // Limited-memory quasi-Newton directions; every accepted step passes a
  // monotone Armijo test, so the objective never increases.
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> direction(n), trial(n), trial_grad, alpha(kHistory);
  int it = 0;
  for (; it < options.max_iterations && inf_norm(grad) >= options.tolerance; ++it) {
    // Two-loop recursion: direction = -H grad.
    direction = grad;
    for (std::size_t h = s_hist.size(); h-- > 0;) {
      alpha[h] = rho_hist[h] * dot(s_hist[h], direction);
      for (std::size_t k = 0; k < n; ++k) direction[k] -= alpha[h] * y_hist[h][k];
    }
    if (!s_hist.empty()) {
      const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (double& d : direction) d *= gamma;
    } else {
      const double scale = 1.0 / std::max(1.0, inf_norm(grad));
      for (double& d : direction) d *= scale;
    }
    for (std::size_t h = 0; h < s_hist.size(); ++h) {
      const double beta = rho_hist[h] * dot(y_hist[h], direction);
      for (std::size_t k = 0; k < n; ++k) direction[k] += (alpha[h] - beta) * s_hist[h][k];
    }
    for (double& d : direction) d = -d;
    double slope = dot(grad, direction);
    if (!(slope < 0.0)) {
      // Not a descent direction: restart from scaled steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      const double scale = 1.0 / std::max(1.0, inf_norm(grad));
      for (std::size_t k = 0; k < n; ++k) direction[k] = -scale * grad[k];
      slope = dot(grad, direction);
    }
    double step = 1.0;
    double accepted_f = f;
    bool accepted = false;
    for (int backtrack = 0; backtrack < 60; ++backtrack) {
      for (std::size_t k = 0; k < n; ++k) trial[k] = params[k] + step * direction[k];
      const double ft = objective(trial, &trial_grad);
      // Once the predicted decrease is below the resolution of f, compare
      // derivatives instead: the objective is convex, so a nonpositive slope
      // at the trial point means f did not rise along the step.
      const double resolution = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f));
      const bool sufficient = step * std::abs(slope) <= resolution ? dot(trial_grad, direction) <= 0.0
                                                                   : ft <= f + 1e-4 * step * slope;
      if (std::isfinite(ft) && sufficient) {
        accepted_f = ft;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further progress representable
    std::vector<double> s_vec(n), y_vec(n);
    for (std::size_t k = 0; k < n; ++k) {
      s_vec[k] = trial[k] - params[k];
      y_vec[k] = trial_grad[k] - grad[k];
    }
    const double sy = dot(s_vec, y_vec);
    if (sy > 1e-12 * std::sqrt(dot(s_vec, s_vec) * dot(y_vec, y_vec))) {
      s_hist.push_back(std::move(s_vec));
      y_hist.push_back(std::move(y_vec));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > kHistory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    params.swap(trial);
    grad.swap(trial_grad);
    f = accepted_f;
    model.objective_trace.push_back(f);
  }
  model.iterations = it;
  model.final_gradient_norm = inf_norm(grad);
  const std::size_t bias_offset = static_cast<std::size_t>(x.n_features) * static_cast<std::size_t>(L);
  model.weights.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(bias_offset));
  model.bias.assign(params.begin() + static_cast<std::ptrdiff_t>(bias_offset), params.end());
  return model;
}

std::vector<double> LogregModel::predict_proba(const SparseRow& row) const {
  const std::size_t L = labels.size();
  std::vector<double> z(bias);
  for (const auto& [j, v] : row.entries) {
    if (j < 0 || j >= n_features) continue;
    const double* w = &weights[static_cast<std::size_t>(j) * L];
    for (std::size_t l = 0; l < L; ++l) z[l] += w[l] * v;
  }
  softmax_in_place(z);
  return z;
}

std::string LogregModel::predict(const SparseRow& row) const {
  const auto p = predict_proba(row);
  return labels[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())];
}

std::vector<std::string> LogregModel::predict(const FeatureMatrix& x) const {
  std::vector<std::string> out;
  out.reserve(x.n_rows());
  for (const auto& r : x.rows) out.push_back(predict(r));
  return out;
}

double LogregModel::weight_norm() const {
  double s = 0.0;
  for (double w : weights) s += w * w;
  return std::sqrt(s);
}

}  // namespace switchminer::baselines
