#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "switchminer/corpus.hpp"
#include "switchminer/lexicon.hpp"
#include "switchminer/metrics.hpp"
#include "switchminer/stats.hpp"

namespace switchminer::switching {

/// One encounter date of a patient with its retained contraceptive orders.
struct TimelineEncounter {
  Date date;
  ModalitySet modalities;
  std::string note_id;  // note of the first retained order at this date
  bool operator==(const TimelineEncounter&) const = default;
};

struct FilterReport {
  int input_orders = 0;
  int missing_start_date = 0;
  int missing_note = 0;
  int short_note = 0;
  int excluded = 0;
  int unmatched = 0;
  int duplicates = 0;
  int no_followup = 0;  // patients
  int retained_orders = 0;
  int retained_patients = 0;
  bool operator==(const FilterReport&) const = default;
};

struct FilteredCohort {
  /// Encounters sorted by date, one entry per date; keyed by patient id.
  std::map<std::string, std::vector<TimelineEncounter>> timelines;
  std::vector<corpus::MedicationOrder> retained_orders;
  FilterReport report;
};

struct FilterOptions {
  std::size_t min_tokens = 50;       // notes need strictly more tokens
  int min_followup_days = 183;
};

FilteredCohort filter_orders(const corpus::Corpus& corpus, const ModalityLexicon& lexicon,
                             const FilterOptions& options = {});

/// The corpus restricted to the orders a filter retained.
corpus::Corpus restrict_to(const corpus::Corpus& corpus, const std::vector<corpus::MedicationOrder>& orders);

struct SwitchEvent {
  std::string patient_id;
  Date prev_encounter_date;
  Date curr_encounter_date;
  ModalitySet stopped;
  ModalitySet started;
  std::string note_id;
  bool operator==(const SwitchEvent&) const = default;
};

/// Events for one patient's timeline. Throws std::logic_error if the
/// timeline is not strictly increasing in date.
std::vector<SwitchEvent> detect_switches(const std::string& patient_id,
                                         const std::vector<TimelineEncounter>& timeline);

/// All patients, ordered by (patient_id, curr_encounter_date).
std::vector<SwitchEvent> detect_switches(const FilteredCohort& cohort);

Json to_json(const SwitchEvent& e);
SwitchEvent switch_event_from_json(const Json& j);

struct ArmCounts {
  int with_switch = 0;
  int without_switch = 0;
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

struct CohortSummary {
  int patients_with_switch = 0;
  int patients_without_switch = 0;
  int total_events = 0;
  std::map<corpus::RaceEthnicity, ArmCounts> by_race;
  std::map<corpus::Language, ArmCounts> by_language;
  std::map<Modality, ArmCounts> by_first_modality;
  MeanSd age_switch;
  MeanSd age_no_switch;
  /// pair_matrix[s][t]: count of (stopped s, started t) pairs across events,
  /// indexed in kPrescribedModalities order.
  std::array<std::array<int, 6>, 6> pair_matrix{};
  std::optional<stats::TestResult> race_test;
  std::optional<stats::TestResult> language_test;
  std::optional<stats::TestResult> first_modality_test;
  std::optional<stats::TestResult> age_test;
};

CohortSummary summarize_cohort(const corpus::Corpus& corpus, const FilteredCohort& cohort,
                               const std::vector<SwitchEvent>& events);

/// Table-1 style delimited rendering (tab separated).
std::string render_demographics_table(const CohortSummary& summary);
std::string render_pair_matrix(const CohortSummary& summary);

}  // namespace switchminer::switching
