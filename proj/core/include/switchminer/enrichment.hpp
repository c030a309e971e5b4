#pragma once

#include <optional>
#include <string>
#include <vector>

#include "switchminer/jsonl.hpp"
#include "switchminer/topic_model.hpp"

namespace switchminer::topics {

struct EnrichmentCell {
  std::optional<double> theta;
  std::optional<double> lift;
  std::optional<double> score;  // log2(lift); unavailable when lift is 0
};

struct EnrichmentMatrix {
  std::vector<int> topics;
  std::vector<std::string> subgroups;
  std::vector<std::vector<EnrichmentCell>> cells;  // [topic][subgroup]
  std::vector<double> topic_weight;                // Σ_n q_nk
  std::vector<double> subgroup_size;               // Σ_n y_nj
  std::size_t n_notes = 0;
};

/// θ_kj = Σ_n q_nk y_nj / (Σ_n q_nk · Σ_n y_nj), lift = N·θ, score = log2(lift).
/// `q` is n × K and `y` is n × J (0/1 indicators). Cells of zero-weight
/// topics or empty subgroups are unavailable.
EnrichmentMatrix enrichment_scores(const std::vector<std::vector<double>>& q, const std::vector<std::vector<double>>& y,
                                   std::vector<int> topic_ids, std::vector<std::string> subgroup_names);

/// Enrichment of the clustered notes of a model (noise and reserved notes
/// excluded) against a categorical attribute per note. Subgroups appear in
/// `subgroup_order`; notes whose value is not listed are excluded.
EnrichmentMatrix enrichment_for_model(const TopicModel& model, const std::vector<std::string>& subgroup_of_note,
                                      const std::vector<std::string>& subgroup_order);

/// topic, subgroup, theta, lift, log2_lift; "NA" for unavailable values.
std::string render_enrichment_table(const EnrichmentMatrix& m);
Json to_json(const EnrichmentMatrix& m);

}  // namespace switchminer::topics
