#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "switchminer/config.hpp"
#include "switchminer/jsonl.hpp"
#include "switchminer/switching.hpp"

namespace switchminer::pipeline {

enum class Stage { Generate, Detect, EvaluatePrompts, Extract, Baselines, Topics, Enrich, Report };

/// Execution order. Prompt evaluation precedes extraction because extraction
/// runs the prompt it selects.
inline constexpr std::array<Stage, 8> kAllStages = {Stage::Generate,  Stage::Detect, Stage::EvaluatePrompts,
                                                    Stage::Extract,   Stage::Baselines, Stage::Topics,
                                                    Stage::Enrich,    Stage::Report};

std::string_view to_string(Stage s);
/// Accepts both "evaluate_prompts" and "evaluate-prompts".
std::optional<Stage> parse_stage(std::string_view s);
/// Comma-separated list or "all"; returned in execution order.
std::vector<Stage> parse_stage_list(std::string_view list);

struct StageOutcome {
  Stage stage = Stage::Generate;
  bool skipped = false;
  double wall_time_ms = 0.0;
  std::vector<std::string> outputs;  // relative to the output dir
  std::vector<std::string> warnings;
};

struct RunReport {
  std::vector<StageOutcome> stages;
  Json manifest;
  int exit_status = 0;
};

/// Runs the requested stages in execution order. Each stage reads only
/// persisted artifacts of earlier stages and is skipped when its inputs,
/// configuration and outputs match the manifest. Throws Error naming the
/// stage to run first when an input artifact is missing.
RunReport run_pipeline(const PipelineConfig& config, const std::vector<Stage>& stages, std::ostream* log = nullptr);

/// SHA-256 of the manifest with wall times removed; equal for reproducible runs.
std::string manifest_digest(const Json& manifest);

/// Exclusive lock on an output directory, held for the object's lifetime.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::filesystem::path path_;
};

/// Patients held out for prompt evaluation and the notes on each side.
struct DevSplit {
  std::vector<std::string> dev_patients;
  std::vector<std::string> dev_notes;
  std::vector<std::string> test_notes;
};

/// Samples ⌈fraction · P⌉ (at least one) of the P patients with a switch event.
DevSplit choose_dev_split(const std::vector<switching::SwitchEvent>& events, double fraction, std::uint64_t seed);
Json to_json(const DevSplit& s);
DevSplit dev_split_from_json(const Json& j);

struct PromptScore {
  int prompt_id = 0;
  double started_f1 = 0.0;
  double stopped_f1 = 0.0;
  [[nodiscard]] double mean() const { return 0.5 * (started_f1 + stopped_f1); }
};

/// Highest mean of started and stopped micro-F1; ties go to the lowest prompt id.
int select_best_prompt(const std::vector<PromptScore>& scores);

// Artifact paths relative to the output directory.
namespace artifacts {
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kCorpusDir = "corpus";
inline constexpr const char* kEvents = "detect/events.jsonl";
inline constexpr const char* kFilterReport = "detect/filter_report.json";
inline constexpr const char* kCohortTable = "detect/cohort_table.tsv";
inline constexpr const char* kPairMatrix = "detect/pair_matrix.tsv";
inline constexpr const char* kCohortSummary = "detect/cohort_summary.json";
inline constexpr const char* kSplit = "detect/split.json";
inline constexpr const char* kPromptScores = "prompts/prompt_scores.tsv";
inline constexpr const char* kBestPrompt = "prompts/best_prompt.json";
inline constexpr const char* kExtractions = "extract/extractions.jsonl";
inline constexpr const char* kExtractScores = "extract/scores.tsv";
inline constexpr const char* kVerdicts = "extract/verdicts.jsonl";
inline constexpr const char* kAnnotationSummary = "extract/annotation_summary.json";
inline constexpr const char* kLearningCurve = "baselines/learning_curve.tsv";
inline constexpr const char* kGridSelections = "baselines/grid_selections.tsv";
inline constexpr const char* kTopicAssignments = "topics/assignments.jsonl";
inline constexpr const char* kTopicKeywords = "topics/keywords.tsv";
inline constexpr const char* kTopicModel = "topics/model.json";
inline constexpr const char* kEnrichmentTable = "enrich/enrichment.tsv";
inline constexpr const char* kEnrichmentJson = "enrich/enrichment.json";
inline constexpr const char* kReportDir = "report";
std::string dev_prompt(int prompt_id);  // prompts/dev_prompt_<id>.jsonl
}  // namespace artifacts

}  // namespace switchminer::pipeline
