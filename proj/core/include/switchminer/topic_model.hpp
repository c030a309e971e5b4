#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "switchminer/embedding.hpp"
#include "switchminer/hdbscan.hpp"
#include "switchminer/matrix.hpp"
#include "switchminer/pca.hpp"

namespace switchminer::topics {

/// Topic id for reasons that are empty or say there is no relevant reason.
inline constexpr int kReservedTopic = 0;
inline constexpr int kNoise = -1;

/// True for "", "none", "no relevant reason" and similar (case and
/// punctuation insensitive).
bool is_reserved_reason(std::string_view reason);

struct Keyword {
  std::string term;
  double score = 0.0;
  bool operator==(const Keyword&) const = default;
};

/// Class-based TF-IDF: score(t, c) = (count(t, c) / words(c)) · ln(1 + m̄ / f_t).
/// Documents with a negative label are ignored.
std::map<int, std::vector<Keyword>> ctfidf_terms(const std::vector<std::string>& documents,
                                                 const std::vector<int>& labels, std::size_t top_n = 10);

/// q[n][k] ∝ exp(−‖x_n − c_k‖ / τ) over the K centroids; rows with a
/// negative label are all zero. Labels here are 0-based centroid indices.
std::vector<std::vector<double>> soft_weights(const Matrix& points, const std::vector<int>& labels,
                                              const std::vector<std::vector<double>>& centroids, double tau = 1.0);

struct TopicOptions {
  std::size_t pca_components = 5;
  HdbscanOptions hdbscan;
  double tau = 1.0;
  std::size_t top_n = 10;
  EmbeddingConfig embedding;
};

struct TopicModel {
  std::vector<std::string> note_ids;
  std::vector<std::string> documents;
  /// -1 noise, 0 reserved, 1..n_topics clusters.
  std::vector<int> labels;
  int n_topics = 0;
  /// Reduced coordinates; reserved rows are zero.
  Matrix points;
  std::vector<std::vector<double>> centroids;  // index k-1 for topic k
  /// n × (n_topics + 1); column 0 is the reserved topic.
  std::vector<std::vector<double>> weights;
  std::map<int, std::vector<Keyword>> keywords;  // topics 1..n_topics
  std::map<int, std::string> topic_names;
  std::vector<std::string> warnings;

  bool operator==(const TopicModel&) const = default;
};

/// Builds a model from already reduced points. `labels` uses the model
/// convention (-1, 0, 1..K).
TopicModel assemble_topic_model(std::vector<std::string> note_ids, std::vector<std::string> documents,
                                std::vector<int> labels, Matrix points, double tau, std::size_t top_n);

/// Embeds, reduces, clusters and keywords the reasons.
TopicModel fit_topics(const std::vector<std::string>& note_ids, const std::vector<std::string>& reasons,
                      const TopicOptions& options);

struct GroupingEntry {
  int grouped = 0;
  std::string name;
};
using GroupingMap = std::map<int, GroupingEntry>;  // raw topic → grouped topic

/// Lines `raw_id<TAB>grouped_id<TAB>display_name`; `#` comments.
GroupingMap parse_grouping(std::string_view text);
GroupingMap load_grouping(const std::filesystem::path& path);
GroupingMap identity_grouping(const TopicModel& model);

/// Merges raw topics. Throws InvalidInput when a raw topic is not covered or
/// the grouped ids are not 1..K'.
TopicModel group_topics(const TopicModel& model, const GroupingMap& grouping, std::size_t top_n = 10);

/// topic, rank, term, score.
std::string render_keyword_table(const TopicModel& model);
Json to_json(const TopicModel& model);

}  // namespace switchminer::topics
