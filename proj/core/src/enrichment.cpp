#include "switchminer/enrichment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "switchminer/error.hpp"

namespace switchminer::topics {

EnrichmentMatrix enrichment_scores(const std::vector<std::vector<double>>& q, const std::vector<std::vector<double>>& y,
                                   std::vector<int> topic_ids, std::vector<std::string> subgroup_names) {
  if (q.size() != y.size()) throw InvalidInput("enrichment: q and y must have the same number of rows");
  EnrichmentMatrix m;
  m.topics = std::move(topic_ids);
  m.subgroups = std::move(subgroup_names);
  const std::size_t K = m.topics.size();
  const std::size_t J = m.subgroups.size();
  m.n_notes = q.size();
  m.topic_weight.assign(K, 0.0);
  m.subgroup_size.assign(J, 0.0);
  std::vector<std::vector<double>> joint(K, std::vector<double>(J, 0.0));
  for (std::size_t n = 0; n < q.size(); ++n) {
    if (q[n].size() != K || y[n].size() != J) throw InvalidInput("enrichment: ragged q or y row");
    for (std::size_t k = 0; k < K; ++k) m.topic_weight[k] += q[n][k];
    for (std::size_t j = 0; j < J; ++j) {
      m.subgroup_size[j] += y[n][j];
      if (y[n][j] == 0.0) continue;
      for (std::size_t k = 0; k < K; ++k) joint[k][j] += q[n][k] * y[n][j];
    }
  }
  m.cells.assign(K, std::vector<EnrichmentCell>(J));
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < J; ++j) {
      if (m.topic_weight[k] <= 0.0 || m.subgroup_size[j] <= 0.0) continue;
      EnrichmentCell& c = m.cells[k][j];
      c.theta = joint[k][j] / (m.topic_weight[k] * m.subgroup_size[j]);
      c.lift = static_cast<double>(m.n_notes) * *c.theta;
      if (*c.lift > 0.0) c.score = std::log2(*c.lift);
    }
  }
  return m;
}

EnrichmentMatrix enrichment_for_model(const TopicModel& model, const std::vector<std::string>& subgroup_of_note,
                                      const std::vector<std::string>& subgroup_order) {
  if (subgroup_of_note.size() != model.labels.size()) {
    throw InvalidInput("enrichment: one subgroup value per note is required");
  }
  std::vector<std::vector<double>> q, y;
  for (std::size_t n = 0; n < model.labels.size(); ++n) {
    if (model.labels[n] < 1) continue;
    auto it = std::find(subgroup_order.begin(), subgroup_order.end(), subgroup_of_note[n]);
    if (it == subgroup_order.end()) continue;
    std::vector<double> indicator(subgroup_order.size(), 0.0);
    indicator[static_cast<std::size_t>(it - subgroup_order.begin())] = 1.0;
    y.push_back(std::move(indicator));
    q.emplace_back(model.weights[n].begin() + 1, model.weights[n].end());
  }
  std::vector<int> topics;
  for (int k = 1; k <= model.n_topics; ++k) topics.push_back(k);
  return enrichment_scores(q, y, std::move(topics), subgroup_order);
}

namespace {

std::string num(std::optional<double> v) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

}  // namespace

std::string render_enrichment_table(const EnrichmentMatrix& m) {
  std::ostringstream out;
  out << "topic\tsubgroup\ttheta\tlift\tlog2_lift\n";
  for (std::size_t k = 0; k < m.topics.size(); ++k) {
    for (std::size_t j = 0; j < m.subgroups.size(); ++j) {
      const auto& c = m.cells[k][j];
      out << m.topics[k] << '\t' << m.subgroups[j] << '\t' << num(c.theta) << '\t' << num(c.lift) << '\t'
          << num(c.score) << '\n';
    }
  }
  return out.str();
}

Json to_json(const EnrichmentMatrix& m) {
  auto opt = [](std::optional<double> v) { return v ? Json(*v) : Json(nullptr); };
  Json cells = Json::array();
  for (std::size_t k = 0; k < m.topics.size(); ++k) {
    Json row = Json::array();
    for (const auto& c : m.cells[k]) row.push_back({{"theta", opt(c.theta)}, {"lift", opt(c.lift)}, {"score", opt(c.score)}});
    cells.push_back(row);
  }
  return {{"topics", m.topics},
          {"subgroups", m.subgroups},
          {"n_notes", m.n_notes},
          {"topic_weight", m.topic_weight},
          {"subgroup_size", m.subgroup_size},
          {"cells", cells}};
}

}  // namespace switchminer::topics
