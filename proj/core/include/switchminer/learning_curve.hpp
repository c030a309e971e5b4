#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "switchminer/corpus.hpp"
#include "switchminer/features.hpp"
#include "switchminer/logreg.hpp"
#include "switchminer/switching.hpp"

namespace switchminer::baselines {

enum class ModelKind { Logreg, RandomForest };
enum class Task { Started, Stopped };

std::string_view to_string(ModelKind m);
std::string_view to_string(Task t);
std::optional<ModelKind> parse_model_kind(std::string_view s);

/// Weak labels from structured orders: the primary modality of each side of
/// the event (None for an empty side).
struct SilverLabel {
  std::string note_id;
  Modality started = Modality::None;
  Modality stopped = Modality::None;
  bool operator==(const SilverLabel&) const = default;
};

std::vector<SilverLabel> silver_labels(const std::vector<switching::SwitchEvent>& events);

struct LabeledNote {
  std::string note_id;
  std::string patient_id;
  std::string text;
  Modality started = Modality::None;
  Modality stopped = Modality::None;
};

/// Switch notes with silver labels, skipping patients in `excluded_patients`.
std::vector<LabeledNote> labeled_notes(const corpus::Corpus& corpus, const std::vector<switching::SwitchEvent>& events,
                                       const std::set<std::string>& excluded_patients = {});

struct BaselineGrid {
  std::vector<double> C = {0.01, 0.1, 1, 10, 100, 1000};
  std::vector<int> n_estimators = {50, 100, 250, 500};
  std::vector<int> max_depth = {20, 50, 100};
};

struct Hyperparameters {
  double C = 1.0;
  int n_estimators = 100;
  int max_depth = 20;
  bool operator==(const Hyperparameters&) const = default;
};

struct LearningCurveOptions {
  std::vector<Task> tasks = {Task::Started, Task::Stopped};
  std::vector<ModelKind> models = {ModelKind::Logreg, ModelKind::RandomForest};
  std::vector<Scheme> schemes = {Scheme::Bow, Scheme::Tfidf};
  BaselineGrid grid;
  std::vector<double> fractions = {1.0, 0.5, 0.25, 0.10, 0.05, 0.01};
  int repeats = 5;
  std::uint64_t seed = 0;
  int min_df = 2;
  LogregOptions logreg;
};

struct PatientSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

/// Reseeded 70/10/20 split of the distinct patient ids.
PatientSplit split_patients(std::vector<std::string> patient_ids, std::uint64_t seed, int repeat);

/// Micro-F1 of single-label predictions as one-element sets ("None" → ∅).
double score_single_label(const std::vector<Modality>& gold, const std::vector<std::string>& predicted);

/// Trains on `train` and scores on `test`; nullopt when the training labels
/// have fewer than two classes or the vocabulary is empty.
std::optional<double> fit_and_score(const std::vector<LabeledNote>& train, const std::vector<LabeledNote>& test,
                                    Task task, ModelKind model, Scheme scheme, const Hyperparameters& h,
                                    const LearningCurveOptions& options, std::uint64_t model_seed);

struct GridSelection {
  int repeat = 0;
  Task task = Task::Started;
  ModelKind model = ModelKind::Logreg;
  Scheme scheme = Scheme::Bow;
  Hyperparameters chosen;
  double validation_f1 = 0.0;
};

struct LearningCurveCell {
  Task task = Task::Started;
  ModelKind model = ModelKind::Logreg;
  Scheme scheme = Scheme::Bow;
  double fraction = 1.0;
  std::vector<double> scores;  // one per repeat where the cell was computable
  std::optional<double> mean_f1;
  std::optional<double> sd_f1;
  int n_repeats = 0;
};

struct LearningCurveResult {
  std::vector<LearningCurveCell> cells;
  std::vector<GridSelection> selections;
  std::vector<PatientSplit> splits;
};

/// Throws InvalidInput for fewer than 50 labeled notes.
LearningCurveResult evaluate_learning_curve(const std::vector<LabeledNote>& notes, const LearningCurveOptions& options);

/// Columns: task, model, scheme, fraction, mean_f1, sd_f1, n_repeats; "NA" marks unavailable cells.
std::string render_learning_curve_table(const std::vector<LearningCurveCell>& cells);

}  // namespace switchminer::baselines
