#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "switchminer/date.hpp"
#include "switchminer/error.hpp"
#include "switchminer/jsonl.hpp"
#include "switchminer/modality.hpp"

namespace switchminer::corpus {

enum class RaceEthnicity { White, BlackOrAfricanAmerican, Latinx, Asian, Other, MultiRaceEthnicity, Missing };
enum class Language { English, Spanish, Other, Missing };

inline constexpr std::array<RaceEthnicity, 7> kRaceEthnicities = {
    RaceEthnicity::White, RaceEthnicity::BlackOrAfricanAmerican, RaceEthnicity::Latinx, RaceEthnicity::Asian,
    RaceEthnicity::Other, RaceEthnicity::MultiRaceEthnicity,     RaceEthnicity::Missing};
inline constexpr std::array<Language, 4> kLanguages = {Language::English, Language::Spanish, Language::Other,
                                                       Language::Missing};

std::string_view to_string(RaceEthnicity r);
std::string_view to_string(Language l);
/// Display labels as they appear in cohort tables ("Black or African American", ...).
std::string_view display_name(RaceEthnicity r);
/// Unknown names map to Missing.
RaceEthnicity parse_race_ethnicity(std::string_view name);
Language parse_language(std::string_view name);

struct Patient {
  std::string patient_id;
  Date birth_date;
  RaceEthnicity race_ethnicity = RaceEthnicity::Missing;
  Language preferred_language = Language::Missing;
  bool operator==(const Patient&) const = default;
};

struct MedicationOrder {
  std::string order_id;
  std::string patient_id;
  std::optional<Date> encounter_date;  // documented start date
  std::string raw_name;
  std::optional<std::string> note_id;
  bool operator==(const MedicationOrder&) const = default;
};

struct ClinicalNote {
  std::string note_id;
  std::string patient_id;
  Date encounter_date;
  std::string text;

  /// Computed with the baseline tokenizer; never stored on ingest.
  [[nodiscard]] std::size_t token_count() const;
  bool operator==(const ClinicalNote&) const = default;
};

struct GoldLabel {
  std::string note_id;
  ModalitySet started;
  ModalitySet stopped;
  std::string reason_text;
  std::optional<int> reason_topic;
  /// Drug strings exactly as they appear in the note text (empty when the
  /// note does not name the drug).
  std::string started_raw;
  std::string stopped_raw;
  bool operator==(const GoldLabel&) const = default;
};

struct Corpus {
  std::vector<Patient> patients;
  std::vector<MedicationOrder> orders;
  std::vector<ClinicalNote> notes;
  std::optional<std::vector<GoldLabel>> gold;
  std::map<std::string, Date> last_encounter_date;  // per patient

  bool operator==(const Corpus&) const = default;

  [[nodiscard]] const Patient* find_patient(std::string_view id) const;
  [[nodiscard]] const ClinicalNote* find_note(std::string_view id) const;
  [[nodiscard]] const GoldLabel* find_gold(std::string_view note_id) const;
};

enum class Severity { Warning, Error };

struct Finding {
  std::string record_id;
  std::string rule;
  Severity severity = Severity::Error;
  std::string detail;
  bool operator==(const Finding&) const = default;
};

/// Raised by load_corpus when the corpus breaks a referential or uniqueness rule.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Finding> findings);
  [[nodiscard]] const std::vector<Finding>& findings() const { return findings_; }

 private:
  std::vector<Finding> findings_;
};

/// Checks every Corpus invariant. Orders without a start date are reported as
/// warnings ("missing_start_date"); they are dropped later by filter_orders.
std::vector<Finding> validate_corpus(const Corpus& corpus);

inline constexpr std::string_view kSchemaVersion = "1";

struct LoadResult {
  Corpus corpus;
  std::vector<MalformedLine> malformed;
};

/// Loads patients.jsonl, orders.jsonl, notes.jsonl and the optional gold.jsonl
/// from `dir`. Throws IoError for a missing required file, InvalidInput for an
/// unknown schema version and ValidationError for error-severity findings.
LoadResult load_corpus(const std::filesystem::path& dir, std::string_view schema_version = kSchemaVersion);

void write_corpus(const std::filesystem::path& dir, const Corpus& corpus);

Json to_json(const Patient& p, const Corpus& corpus);
Json to_json(const MedicationOrder& o);
Json to_json(const ClinicalNote& n);
Json to_json(const GoldLabel& g);
GoldLabel gold_from_json(const Json& j);

/// Stable content hash over the serialized corpus.
std::string corpus_hash(const Corpus& corpus);

}  // namespace switchminer::corpus
