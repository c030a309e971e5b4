#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "switchminer/corpus.hpp"
#include "switchminer/jsonl.hpp"

namespace switchminer::corpus {

/// A family of interchangeable reason phrasings. `requires_stopped` restricts
/// the family to switches away from one modality (e.g. forgotten pills).
struct ReasonFamily {
  int topic = 0;
  std::string name;
  std::vector<std::string> phrases;
  std::optional<Modality> requires_stopped;
};

struct GeneratorConfig {
  int n_patients = 1000;
  double switch_rate = 0.076;
  /// Fraction of switching patients that switch twice.
  double second_switch_rate = 0.2;
  std::array<double, 7> race_weights = {0.451, 0.082, 0.151, 0.203, 0.081, 0.031, 0.001};
  std::array<double, 4> language_weights = {0.969, 0.018, 0.012, 0.001};
  /// First-modality mixture in kPrescribedModalities order.
  std::array<double, 6> first_modality_weights = {0.6, 0.06, 0.09, 0.07, 0.06, 0.12};
  double age_mean_switch = 25.9;
  double age_sd_switch = 7.7;
  double age_mean_no_switch = 29.1;
  double age_sd_no_switch = 8.4;
  std::vector<ReasonFamily> reasons;  // empty → built-in families
  /// Per race/ethnicity multiplier on a topic's sampling weight.
  std::map<RaceEthnicity, std::map<int, double>> topic_multipliers;
  int distractors_min = 5;
  int distractors_max = 9;
  double p_refill_short_note = 0.05;
  double p_noise_missing_note = 0.05;
  double p_noise_missing_date = 0.03;
  double p_noise_duplicate = 0.08;
  double p_noise_excluded = 0.03;
  double p_noise_unrelated = 0.05;
  double p_lost_to_followup = 0.1;
  /// When false, switch notes name only the started drug.
  bool mention_stopped = true;

  /// Throws InvalidInput when a mixture does not sum to 1 within 1e-9 or a
  /// rate is outside [0, 1].
  void validate() const;
};

GeneratorConfig generator_config_from_json(const Json& j);
Json to_json(const GeneratorConfig& config);

const std::vector<ReasonFamily>& builtin_reason_families();

struct DrugName {
  Modality modality;
  std::string order_name;  // structured medication string
  std::string note_name;   // how clinicians refer to it in text
};
const std::vector<DrugName>& builtin_drug_names();

/// Fixed clauses a faulty extractor may invent; none of their words occur in
/// generated note text.
const std::vector<std::string>& fabricated_reasons();

/// Deterministic in (config, seed).
Corpus generate_synthetic_corpus(const GeneratorConfig& config, std::uint64_t seed);

}  // namespace switchminer::corpus
