#include "switchminer/topic_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "switchminer/error.hpp"
#include "switchminer/tokenizer.hpp"

namespace switchminer::topics {

bool is_reserved_reason(std::string_view reason) {
  std::string words;
  for (const auto& t : baselines::tokenize(reason)) {
    if (!words.empty()) words += ' ';
    words += t;
  }
  return words.empty() || words == "none" || words == "no relevant reason" || words == "not mentioned" ||
         words == "no reason given" || words == "no reason";
}

std::map<int, std::vector<Keyword>> ctfidf_terms(const std::vector<std::string>& documents,
                                                 const std::vector<int>& labels, std::size_t top_n) {
  if (documents.size() != labels.size()) throw InvalidInput("ctfidf_terms: documents and labels differ in length");
  std::map<int, std::map<std::string, double>> counts;
  std::map<int, double> words;
  std::map<std::string, double> corpus_counts;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    if (labels[i] < 0) continue;
    auto& c = counts[labels[i]];
    words[labels[i]];
    for (const auto& t : baselines::tokenize(documents[i])) {
      c[t] += 1;
      words[labels[i]] += 1;
      corpus_counts[t] += 1;
    }
  }
  std::map<int, std::vector<Keyword>> out;
  if (counts.empty()) return out;
  double total_words = 0.0;
  for (const auto& [c, w] : words) total_words += w;
  const double mean_words = total_words / static_cast<double>(counts.size());
  for (const auto& [c, terms] : counts) {
    std::vector<Keyword> ranked;
    for (const auto& [t, n] : terms) {
      ranked.push_back({t, (n / words[c]) * std::log(1.0 + mean_words / corpus_counts[t])});
    }
    std::sort(ranked.begin(), ranked.end(), [](const Keyword& a, const Keyword& b) {
      return a.score != b.score ? a.score > b.score : a.term < b.term;
    });
    if (ranked.size() > top_n) ranked.resize(top_n);
    out[c] = std::move(ranked);
  }
  return out;
}

std::vector<std::vector<double>> soft_weights(const Matrix& points, const std::vector<int>& labels,
                                              const std::vector<std::vector<double>>& centroids, double tau) {
  if (!(tau > 0.0)) throw InvalidInput("soft_weights: tau must be positive");
  const std::size_t K = centroids.size();
  std::vector<std::vector<double>> q(points.rows, std::vector<double>(K, 0.0));
  if (K == 0) return q;
  std::vector<double> logits(K);
  for (std::size_t n = 0; n < points.rows; ++n) {
    if (labels[n] < 0) continue;
    for (std::size_t k = 0; k < K; ++k) {
      double s = 0.0;
      for (std::size_t c = 0; c < points.cols; ++c) {
        const double d = points(n, c) - centroids[k][c];
        s += d * d;
      }
      logits[k] = -std::sqrt(s) / tau;
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) z += std::exp(logits[k] - m);
    for (std::size_t k = 0; k < K; ++k) q[n][k] = std::exp(logits[k] - m) / z;
  }
  return q;
}

namespace {

std::vector<std::vector<double>> cluster_means(const Matrix& points, const std::vector<int>& labels, int k_topics) {
  std::vector<std::vector<double>> means(static_cast<std::size_t>(k_topics), std::vector<double>(points.cols, 0.0));
  std::vector<double> counts(static_cast<std::size_t>(k_topics), 0.0);
  for (std::size_t n = 0; n < points.rows; ++n) {
    if (labels[n] < 1) continue;
    const auto k = static_cast<std::size_t>(labels[n] - 1);
    counts[k] += 1;
    for (std::size_t c = 0; c < points.cols; ++c) means[k][c] += points(n, c);
  }
  for (std::size_t k = 0; k < means.size(); ++k) {
    if (counts[k] == 0) continue;
    for (double& v : means[k]) v /= counts[k];
  }
  return means;
}

}  // namespace

TopicModel assemble_topic_model(std::vector<std::string> note_ids, std::vector<std::string> documents,
                                std::vector<int> labels, Matrix points, double tau, std::size_t top_n) {
  if (labels.size() != documents.size() || points.rows != documents.size()) {
    throw InvalidInput("topic model: labels, documents and points must align");
  }
  TopicModel m;
  m.note_ids = std::move(note_ids);
  m.documents = std::move(documents);
  m.labels = std::move(labels);
  m.points = std::move(points);
  for (int l : m.labels) m.n_topics = std::max(m.n_topics, l);
  m.centroids = cluster_means(m.points, m.labels, m.n_topics);

  std::vector<int> zero_based(m.labels.size());
  for (std::size_t i = 0; i < m.labels.size(); ++i) zero_based[i] = m.labels[i] >= 1 ? m.labels[i] - 1 : -1;
  const auto q = soft_weights(m.points, zero_based, m.centroids, tau);
  m.weights.assign(m.labels.size(), std::vector<double>(static_cast<std::size_t>(m.n_topics) + 1, 0.0));
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    if (m.labels[i] == kReservedTopic) {
      m.weights[i][0] = 1.0;
    } else if (m.labels[i] >= 1) {
      for (std::size_t k = 0; k < q[i].size(); ++k) m.weights[i][k + 1] = q[i][k];
    }
  }
  std::vector<int> keyword_labels(m.labels.size());
  for (std::size_t i = 0; i < m.labels.size(); ++i) keyword_labels[i] = m.labels[i] >= 1 ? m.labels[i] : -1;
  m.keywords = ctfidf_terms(m.documents, keyword_labels, top_n);
  return m;
}

TopicModel fit_topics(const std::vector<std::string>& note_ids, const std::vector<std::string>& reasons,
                      const TopicOptions& options) {
  if (note_ids.size() != reasons.size()) throw InvalidInput("fit_topics: ids and reasons differ in length");
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < reasons.size(); ++i) {
    if (!is_reserved_reason(reasons[i])) active.push_back(i);
  }
  std::vector<int> labels(reasons.size(), kReservedTopic);
  Matrix points(reasons.size(), options.pca_components);
  std::vector<std::string> warnings;
  if (!active.empty()) {
    std::vector<std::string> texts;
    for (auto i : active) texts.push_back(reasons[i]);
    const EmbeddingSet emb = embed_texts(texts, options.embedding);
    Matrix reduced;
    if (emb.vectors.rows >= options.pca_components) {
      PcaResult pca = reduce_pca(emb.vectors, options.pca_components);
      warnings = pca.warnings;
      reduced = std::move(pca.projected);
    } else {
      warnings.push_back("fewer reasons than PCA components; all reasons are noise");
      reduced = Matrix(emb.vectors.rows, options.pca_components);
    }
    const HdbscanResult h = emb.vectors.rows >= options.pca_components
                                ? cluster_hdbscan(reduced, options.hdbscan)
                                : HdbscanResult{std::vector<int>(active.size(), -1), 0, {}, {}, {}, {}};
    for (std::size_t a = 0; a < active.size(); ++a) {
      labels[active[a]] = h.labels[a] < 0 ? kNoise : h.labels[a] + 1;
      for (std::size_t c = 0; c < options.pca_components; ++c) points(active[a], c) = reduced(a, c);
    }
  }
  TopicModel m = assemble_topic_model(note_ids, reasons, std::move(labels), std::move(points), options.tau,
                                      options.top_n);
  m.warnings = std::move(warnings);
  return m;
}

GroupingMap parse_grouping(std::string_view text) {
  GroupingMap g;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::istringstream fields(line);
    std::string raw, grouped, name;
    std::getline(fields, raw, '\t');
    std::getline(fields, grouped, '\t');
    std::getline(fields, name);
    try {
      const int r = std::stoi(raw);
      if (g.contains(r)) throw InvalidInput("grouping line " + std::to_string(number) + ": duplicate raw topic");
      g[r] = {std::stoi(grouped), name};
    } catch (const std::logic_error&) {
      throw InvalidInput("grouping line " + std::to_string(number) + ": expected raw_id<TAB>grouped_id<TAB>name");
    }
  }
  return g;
}

GroupingMap load_grouping(const std::filesystem::path& path) { return parse_grouping(read_text_file(path)); }

GroupingMap identity_grouping(const TopicModel& model) {
  GroupingMap g;
  for (int k = 1; k <= model.n_topics; ++k) {
    auto it = model.topic_names.find(k);
    g[k] = {k, it == model.topic_names.end() ? std::string() : it->second};
  }
  return g;
}

TopicModel group_topics(const TopicModel& model, const GroupingMap& grouping, std::size_t top_n) {
  std::vector<int> uncovered;
  for (int k = 1; k <= model.n_topics; ++k) {
    if (!grouping.contains(k)) uncovered.push_back(k);
  }
  if (!uncovered.empty()) {
    std::string list;
    for (int k : uncovered) list += (list.empty() ? "" : ", ") + std::to_string(k);
    throw InvalidInput("grouping map does not cover raw topics: " + list);
  }
  std::set<int> grouped_ids;
  for (const auto& [raw, e] : grouping) {
    if (raw >= 1 && raw <= model.n_topics) grouped_ids.insert(e.grouped);
  }
  const int k_grouped = static_cast<int>(grouped_ids.size());
  if (!grouped_ids.empty() && (*grouped_ids.begin() != 1 || *grouped_ids.rbegin() != k_grouped)) {
    throw InvalidInput("grouped topic ids must be contiguous from 1");
  }

  TopicModel out = model;
  out.n_topics = k_grouped;
  for (int& l : out.labels) {
    if (l >= 1) l = grouping.at(l).grouped;
  }
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(k_grouped) + 1, 0.0);
    row[0] = model.weights[i][0];
    for (int k = 1; k <= model.n_topics; ++k) {
      row[static_cast<std::size_t>(grouping.at(k).grouped)] += model.weights[i][static_cast<std::size_t>(k)];
    }
    out.weights[i] = std::move(row);
  }
  out.centroids = cluster_means(out.points, out.labels, k_grouped);
  std::vector<int> keyword_labels(out.labels.size());
  for (std::size_t i = 0; i < out.labels.size(); ++i) keyword_labels[i] = out.labels[i] >= 1 ? out.labels[i] : -1;
  out.keywords = ctfidf_terms(out.documents, keyword_labels, top_n);
  out.topic_names.clear();
  for (const auto& [raw, e] : grouping) {
    if (raw >= 1 && raw <= model.n_topics && !e.name.empty()) out.topic_names[e.grouped] = e.name;
  }
  return out;
}

std::string render_keyword_table(const TopicModel& model) {
  std::ostringstream out;
  out << "topic\tname\trank\tterm\tscore\n";
  char buf[32];
  for (const auto& [k, words] : model.keywords) {
    auto name = model.topic_names.find(k);
    for (std::size_t r = 0; r < words.size(); ++r) {
      std::snprintf(buf, sizeof buf, "%.6f", words[r].score);
      out << k << '\t' << (name == model.topic_names.end() ? "" : name->second) << '\t' << r + 1 << '\t'
          << words[r].term << '\t' << buf << '\n';
    }
  }
  return out.str();
}

Json to_json(const TopicModel& model) {
  Json topics = Json::array();
  for (int k = 0; k <= model.n_topics; ++k) {
    Json t = {{"topic", k}};
    t["size"] = std::count(model.labels.begin(), model.labels.end(), k);
    if (auto n = model.topic_names.find(k); n != model.topic_names.end()) t["name"] = n->second;
    if (auto kw = model.keywords.find(k); kw != model.keywords.end()) {
      Json words = Json::array();
      for (const auto& w : kw->second) words.push_back(w.term);
      t["keywords"] = words;
    }
    topics.push_back(t);
  }
  return {{"n_topics", model.n_topics},
          {"n_noise", std::count(model.labels.begin(), model.labels.end(), kNoise)},
          {"topics", topics},
          {"warnings", model.warnings}};
}

}  // namespace switchminer::topics
