#include "switchminer/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "switchminer/enrichment.hpp"
#include "switchminer/error.hpp"
#include "switchminer/extraction.hpp"
#include "switchminer/hashing.hpp"
#include "switchminer/random.hpp"
#include "switchminer/report.hpp"
#include "switchminer/topic_model.hpp"

namespace switchminer::pipeline {

namespace fs = std::filesystem;

namespace {

// Bumped whenever an artifact layout changes, so old manifests never match.
constexpr int kArtifactVersion = 1;

constexpr std::array<std::string_view, 8> kStageNames = {"generate",  "detect", "evaluate_prompts", "extract",
                                                         "baselines", "topics", "enrich",           "report"};

}  // namespace

std::string_view to_string(Stage s) { return kStageNames[static_cast<std::size_t>(s)]; }

std::optional<Stage> parse_stage(std::string_view s) {
  std::string name(s);
  std::replace(name.begin(), name.end(), '-', '_');
  for (std::size_t i = 0; i < kStageNames.size(); ++i) {
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  }
  return std::nullopt;
}

std::vector<Stage> parse_stage_list(std::string_view list) {
  std::set<Stage> chosen;
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t end = list.find(',', start);
    if (end == std::string_view::npos) end = list.size();
    std::string_view item = list.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item == "all") {
      chosen.insert(kAllStages.begin(), kAllStages.end());
    } else if (!item.empty()) {
      auto stage = parse_stage(item);
      if (!stage) throw InvalidInput("unknown stage '" + std::string(item) + "'");
      chosen.insert(*stage);
    }
    start = end + 1;
  }
  if (chosen.empty()) throw InvalidInput("no stages selected");
  return {chosen.begin(), chosen.end()};
}

std::string artifacts::dev_prompt(int prompt_id) {
  return "prompts/dev_prompt_" + std::to_string(prompt_id) + ".jsonl";
}

std::string manifest_digest(const Json& manifest) {
  Json copy = manifest;
  if (auto it = copy.find("stages"); it != copy.end() && it->is_array()) {
    for (auto& s : *it) s.erase("wall_time_ms");
  }
  return sha256_hex(copy.dump());
}

DirectoryLock::DirectoryLock(const fs::path& dir) : path_(dir / ".lock") {
  fs::create_directories(dir);
  std::FILE* f = std::fopen(path_.string().c_str(), "wx");
  if (f == nullptr) {
    throw Error("output directory " + dir.string() + " is in use by another run (remove " + path_.string() +
                " if no run is active)");
  }
  std::fputs("switchminer\n", f);
  std::fclose(f);
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

DevSplit choose_dev_split(const std::vector<switching::SwitchEvent>& events, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidInput("dev fraction must lie in (0, 1)");
  std::set<std::string> patients;
  for (const auto& e : events) patients.insert(e.patient_id);
  std::vector<std::string> order(patients.begin(), patients.end());
  DevSplit split;
  if (!order.empty()) {
    Rng rng(seed);
    rng.shuffle(order);
    auto n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(order.size())));
    n = std::clamp<std::size_t>(n, 1, order.size());
    split.dev_patients.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
    std::sort(split.dev_patients.begin(), split.dev_patients.end());
  }
  const std::set<std::string> dev(split.dev_patients.begin(), split.dev_patients.end());
  for (const auto& e : events) {
    (dev.contains(e.patient_id) ? split.dev_notes : split.test_notes).push_back(e.note_id);
  }
  return split;
}

Json to_json(const DevSplit& s) {
  return {{"dev_patients", s.dev_patients}, {"dev_notes", s.dev_notes}, {"test_notes", s.test_notes}};
}

DevSplit dev_split_from_json(const Json& j) {
  DevSplit s;
  s.dev_patients = j.at("dev_patients").get<std::vector<std::string>>();
  s.dev_notes = j.at("dev_notes").get<std::vector<std::string>>();
  s.test_notes = j.at("test_notes").get<std::vector<std::string>>();
  return s;
}

int select_best_prompt(const std::vector<PromptScore>& scores) {
  if (scores.empty()) throw InvalidInput("no prompt scores to select from");
  const PromptScore* best = &scores.front();
  for (const auto& s : scores) {
    if (s.mean() > best->mean() || (s.mean() == best->mean() && s.prompt_id < best->prompt_id)) best = &s;
  }
  return best->prompt_id;
}

namespace {

std::string fmt(double v, int decimals = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string opt_fmt(const std::optional<double>& v, int decimals = 4) { return v ? fmt(*v, decimals) : "NA"; }

Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json test_json(const std::optional<stats::TestResult>& t) {
  if (!t) return nullptr;
  return {{"statistic", t->statistic}, {"df", t->df}, {"p_value", t->p_value}, {"degenerate", t->degenerate}};
}

Json to_json(const switching::FilterReport& r) {
  return {{"input_orders", r.input_orders},       {"missing_start_date", r.missing_start_date},
          {"missing_note", r.missing_note},       {"short_note", r.short_note},
          {"excluded", r.excluded},               {"unmatched", r.unmatched},
          {"duplicates", r.duplicates},           {"no_followup_patients", r.no_followup},
          {"retained_orders", r.retained_orders}, {"retained_patients", r.retained_patients}};
}

template <typename Key>
Json arm_json(const std::map<Key, switching::ArmCounts>& counts) {
  Json out = Json::object();
  for (const auto& [k, c] : counts) {
    out[std::string(to_string(k))] = {{"with_switch", c.with_switch}, {"without_switch", c.without_switch}};
  }
  return out;
}

Json to_json(const switching::CohortSummary& s) {
  auto mean_sd = [](const switching::MeanSd& m) { return Json{{"mean", m.mean}, {"sd", m.sd}, {"n", m.n}}; };
  return {{"patients_with_switch", s.patients_with_switch},
          {"patients_without_switch", s.patients_without_switch},
          {"total_events", s.total_events},
          {"race_ethnicity", arm_json(s.by_race)},
          {"preferred_language", arm_json(s.by_language)},
          {"first_modality", arm_json(s.by_first_modality)},
          {"age_switch", mean_sd(s.age_switch)},
          {"age_no_switch", mean_sd(s.age_no_switch)},
          {"pair_matrix", s.pair_matrix},
          {"race_test", test_json(s.race_test)},
          {"language_test", test_json(s.language_test)},
          {"first_modality_test", test_json(s.first_modality_test)},
          {"age_test", test_json(s.age_test)}};
}

// Scores of extraction results against the gold labels (when the corpus has
// them) and against the silver labels of the structured switch events.
struct ExtractionScores {
  std::size_t n = 0;
  std::size_t n_errors = 0;
  std::optional<double> gold_started_f1, gold_stopped_f1;
  std::optional<double> gold_started_error_rate, gold_stopped_error_rate;
  double silver_started_f1 = 1.0, silver_stopped_f1 = 1.0;
  std::optional<double> silver_started_kappa, silver_stopped_kappa;
};

ExtractionScores score_extractions(const std::vector<extraction::ExtractionResult>& results,
                                   const corpus::Corpus& corpus,
                                   const std::map<std::string, const switching::SwitchEvent*>& event_of_note) {
  ExtractionScores s;
  s.n = results.size();
  std::vector<std::pair<ModalitySet, ModalitySet>> gs, gp, ss, sp;
  std::vector<std::string> pred_started, pred_stopped, silver_started, silver_stopped;
  bool all_gold = !results.empty();
  long started_wrong = 0, stopped_wrong = 0;
  for (const auto& r : results) {
    if (r.error) ++s.n_errors;
    if (const auto* g = corpus.find_gold(r.note_id)) {
      gs.emplace_back(g->started, r.started);
      gp.emplace_back(g->stopped, r.stopped);
      started_wrong += g->started != r.started;
      stopped_wrong += g->stopped != r.stopped;
    } else {
      all_gold = false;
    }
    if (auto it = event_of_note.find(r.note_id); it != event_of_note.end()) {
      ss.emplace_back(it->second->started, r.started);
      sp.emplace_back(it->second->stopped, r.stopped);
      pred_started.push_back(metrics::primary_label(r.started));
      pred_stopped.push_back(metrics::primary_label(r.stopped));
      silver_started.push_back(metrics::primary_label(it->second->started));
      silver_stopped.push_back(metrics::primary_label(it->second->stopped));
    }
  }
  if (all_gold) {
    s.gold_started_f1 = metrics::micro_f1(gs).f1;
    s.gold_stopped_f1 = metrics::micro_f1(gp).f1;
    s.gold_started_error_rate = static_cast<double>(started_wrong) / static_cast<double>(gs.size());
    s.gold_stopped_error_rate = static_cast<double>(stopped_wrong) / static_cast<double>(gp.size());
  }
  s.silver_started_f1 = metrics::micro_f1(ss).f1;
  s.silver_stopped_f1 = metrics::micro_f1(sp).f1;
  if (!pred_started.empty()) {
    s.silver_started_kappa = metrics::cohens_kappa(silver_started, pred_started);
    s.silver_stopped_kappa = metrics::cohens_kappa(silver_stopped, pred_stopped);
  }
  return s;
}

Json to_json(const ExtractionScores& s) {
  return {{"n", s.n},
          {"n_errors", s.n_errors},
          {"gold",
           {{"started_f1", opt_json(s.gold_started_f1)},
            {"stopped_f1", opt_json(s.gold_stopped_f1)},
            {"started_error_rate", opt_json(s.gold_started_error_rate)},
            {"stopped_error_rate", opt_json(s.gold_stopped_error_rate)}}},
          {"silver",
           {{"started_f1", s.silver_started_f1},
            {"stopped_f1", s.silver_stopped_f1},
            {"started_kappa", opt_json(s.silver_started_kappa)},
            {"stopped_kappa", opt_json(s.silver_stopped_kappa)}}}};
}

std::string render_scores_table(const ExtractionScores& s) {
  std::ostringstream out;
  out << "reference\tfield\tmicro_f1\tkappa\terror_rate\tn\n";
  out << "gold\tstarted\t" << opt_fmt(s.gold_started_f1) << "\tNA\t" << opt_fmt(s.gold_started_error_rate) << '\t'
      << s.n << '\n';
  out << "gold\tstopped\t" << opt_fmt(s.gold_stopped_f1) << "\tNA\t" << opt_fmt(s.gold_stopped_error_rate) << '\t'
      << s.n << '\n';
  out << "silver\tstarted\t" << fmt(s.silver_started_f1) << '\t' << opt_fmt(s.silver_started_kappa) << "\tNA\t" << s.n
      << '\n';
  out << "silver\tstopped\t" << fmt(s.silver_stopped_f1) << '\t' << opt_fmt(s.silver_stopped_kappa) << "\tNA\t" << s.n
      << '\n';
  return out.str();
}

std::string render_selections(const std::vector<baselines::GridSelection>& selections) {
  std::ostringstream out;
  out << "repeat\ttask\tmodel\tscheme\tC\tn_estimators\tmax_depth\tvalidation_f1\n";
  for (const auto& g : selections) {
    out << g.repeat << '\t' << baselines::to_string(g.task) << '\t' << baselines::to_string(g.model) << '\t'
        << baselines::to_string(g.scheme) << '\t';
    if (g.model == baselines::ModelKind::Logreg) {
      out << fmt(g.chosen.C, 6) << "\tNA\tNA";
    } else {
      out << "NA\t" << g.chosen.n_estimators << '\t' << g.chosen.max_depth;
    }
    out << '\t' << fmt(g.validation_f1) << '\n';
  }
  return out.str();
}

std::vector<std::string> subgroup_order(const std::string& attribute) {
  std::vector<std::string> order;
  if (attribute == "race_ethnicity") {
    for (auto r : corpus::kRaceEthnicities) {
      if (r != corpus::RaceEthnicity::Missing) order.emplace_back(to_string(r));
    }
  } else {
    for (auto l : corpus::kLanguages) {
      if (l != corpus::Language::Missing) order.emplace_back(to_string(l));
    }
  }
  return order;
}

std::string subgroup_of(const corpus::Patient& p, const std::string& attribute) {
  if (attribute == "race_ethnicity") return std::string(to_string(p.race_ethnicity));
  return std::string(to_string(p.preferred_language));
}

std::string json_text(const Json& j) { return dump_json(j, 2) + "\n"; }

// Per-run state shared by the stage functions.
class Runner {
 public:
  Runner(const PipelineConfig& config, std::ostream* log) : config_(config), out_(config.output_dir), log_(log) {}

  RunReport run(const std::vector<Stage>& stages);

 private:
  struct StageRecord {
    std::string fingerprint;
    std::map<std::string, std::string> inputs;   // relative path → sha256
    std::map<std::string, std::string> outputs;  // relative path → sha256
    std::vector<std::string> warnings;
    double wall_time_ms = 0.0;
  };

  // What a stage reads and how it is parameterised, known before it runs.
  struct StagePlan {
    Json params;
    std::vector<std::pair<std::string, Stage>> required;  // artifact, producing stage
    std::vector<std::string> optional_inputs;
    std::map<std::string, std::string> external_inputs;  // key → sha256
  };

  StagePlan plan(Stage stage) const;
  void execute(Stage stage, StageRecord& record);

  void stage_generate(StageRecord& r);
  void stage_detect(StageRecord& r);
  void stage_evaluate_prompts(StageRecord& r);
  void stage_extract(StageRecord& r);
  void stage_baselines(StageRecord& r);
  void stage_topics(StageRecord& r);
  void stage_enrich(StageRecord& r);
  void stage_report(StageRecord& r);

  void write(StageRecord& r, const std::string& rel, const std::string& content) {
    write_text_file(out_ / rel, content);
    r.outputs[rel] = sha256_hex(content);
  }
  void write_records(StageRecord& r, const std::string& rel, const std::vector<Json>& records) {
    std::string content;
    for (const auto& rec : records) content += dump_json(rec) + "\n";
    write(r, rel, content);
  }

  corpus::Corpus load_run_corpus(StageRecord& r) {
    auto loaded = corpus::load_corpus(out_ / artifacts::kCorpusDir);
    for (const auto& m : loaded.malformed) {
      r.warnings.push_back("skipped malformed line " + std::to_string(m.line_number) + " of " +
                           m.file.filename().string() + ": " + m.message);
    }
    return std::move(loaded.corpus);
  }
  std::vector<switching::SwitchEvent> load_events() const {
    std::vector<switching::SwitchEvent> events;
    for (const auto& j : read_jsonl(out_ / artifacts::kEvents)) events.push_back(switching::switch_event_from_json(j));
    return events;
  }
  DevSplit load_split() const { return dev_split_from_json(Json::parse(read_text_file(out_ / artifacts::kSplit))); }
  std::vector<extraction::ExtractionResult> load_results(const std::string& rel) const {
    std::vector<extraction::ExtractionResult> results;
    for (const auto& j : read_jsonl(out_ / rel)) results.push_back(extraction::extraction_result_from_json(j));
    return results;
  }

  const switching::ModalityLexicon& lexicon() {
    if (!lexicon_) {
      lexicon_ = config_.lexicon ? switching::ModalityLexicon::load(*config_.lexicon)
                                 : switching::ModalityLexicon::builtin();
    }
    return *lexicon_;
  }
  const std::vector<extraction::PromptSpec>& prompts() {
    if (!prompts_) {
      prompts_ = config_.prompt_dir ? extraction::load_prompts(*config_.prompt_dir) : extraction::builtin_prompts();
    }
    return *prompts_;
  }
  extraction::ProviderConfig provider_config() const {
    auto p = config_.provider;
    p.mock.seed = derive_seed(config_.seed ^ config_.provider.mock.seed, "mock");
    return p;
  }
  std::vector<extraction::ExtractionResult> run_extraction(const corpus::Corpus& corpus,
                                                           const std::vector<std::string>& note_ids,
                                                           const extraction::PromptSpec& spec);

  const PipelineConfig& config_;
  fs::path out_;
  std::ostream* log_;
  std::optional<switching::ModalityLexicon> lexicon_;
  std::optional<std::vector<extraction::PromptSpec>> prompts_;
  int report_exit_ = 0;
};

Runner::StagePlan Runner::plan(Stage stage) const {
  StagePlan p;
  p.params = {{"stage", std::string(to_string(stage))}, {"artifact_version", kArtifactVersion}, {"seed", config_.seed}};
  auto corpus_inputs = [&] {
    p.required.emplace_back(std::string(artifacts::kCorpusDir) + "/patients.jsonl", Stage::Generate);
    p.required.emplace_back(std::string(artifacts::kCorpusDir) + "/orders.jsonl", Stage::Generate);
    p.required.emplace_back(std::string(artifacts::kCorpusDir) + "/notes.jsonl", Stage::Generate);
    p.optional_inputs.push_back(std::string(artifacts::kCorpusDir) + "/gold.jsonl");
  };
  auto prompt_text = [&] {
    std::string text;
    if (config_.prompt_dir) {
      for (const auto& s : extraction::load_prompts(*config_.prompt_dir)) text += format_prompt_fixture(s);
    } else {
      for (const auto& s : extraction::builtin_prompts()) text += format_prompt_fixture(s);
    }
    return sha256_hex(text);
  };
  switch (stage) {
    case Stage::Generate:
      if (config_.corpus_dir) {
        for (const char* name : {"corpus.json", "patients.jsonl", "orders.jsonl", "notes.jsonl", "gold.jsonl"}) {
          const fs::path f = *config_.corpus_dir / name;
          if (fs::exists(f)) p.external_inputs[std::string("external/") + name] = sha256_file(f);
        }
        p.params["source"] = "corpus_dir";
      } else {
        p.params["source"] = "generator";
        p.params["generator"] = corpus::to_json(config_.generator);
      }
      break;
    case Stage::Detect:
      corpus_inputs();
      p.params["lexicon"] = sha256_hex(config_.lexicon ? read_text_file(*config_.lexicon)
                                                       : std::string(switching::ModalityLexicon::builtin_text()));
      p.params["min_tokens"] = config_.filter.min_tokens;
      p.params["min_followup_days"] = config_.filter.min_followup_days;
      p.params["dev_fraction"] = config_.dev_fraction;
      break;
    case Stage::EvaluatePrompts:
    case Stage::Extract:
      corpus_inputs();
      p.required.emplace_back(artifacts::kEvents, Stage::Detect);
      p.required.emplace_back(artifacts::kSplit, Stage::Detect);
      if (stage == Stage::Extract) p.required.emplace_back(artifacts::kBestPrompt, Stage::EvaluatePrompts);
      p.params["lexicon"] = sha256_hex(config_.lexicon ? read_text_file(*config_.lexicon)
                                                       : std::string(switching::ModalityLexicon::builtin_text()));
      p.params["prompts"] = prompt_text();
      p.params["provider"] = to_json(provider_config());
      break;
    case Stage::Baselines: {
      corpus_inputs();
      p.required.emplace_back(artifacts::kEvents, Stage::Detect);
      p.required.emplace_back(artifacts::kSplit, Stage::Detect);
      const auto& b = config_.baselines;
      Json tasks = Json::array(), models = Json::array(), schemes = Json::array();
      for (auto t : b.tasks) tasks.push_back(std::string(baselines::to_string(t)));
      for (auto m : b.models) models.push_back(std::string(baselines::to_string(m)));
      for (auto s : b.schemes) schemes.push_back(std::string(baselines::to_string(s)));
      p.params["baselines"] = {{"tasks", tasks},
                               {"models", models},
                               {"schemes", schemes},
                               {"grid",
                                {{"C", b.grid.C}, {"n_estimators", b.grid.n_estimators}, {"max_depth", b.grid.max_depth}}},
                               {"fractions", b.fractions},
                               {"repeats", b.repeats},
                               {"min_df", b.min_df},
                               {"max_iterations", b.logreg.max_iterations},
                               {"tolerance", b.logreg.tolerance}};
      break;
    }
    case Stage::Topics: {
      p.required.emplace_back(artifacts::kExtractions, Stage::Extract);
      const auto& t = config_.topics;
      p.params["topics"] = {{"pca_components", t.pca_components}, {"min_cluster_size", t.min_cluster_size},
                            {"min_samples", t.min_samples},       {"tau", t.tau},
                            {"top_n", t.top_n},                   {"embedding", topics::to_json(t.embedding)}};
      if (t.grouping) p.params["grouping"] = sha256_hex(read_text_file(*t.grouping));
      break;
    }
    case Stage::Enrich:
      corpus_inputs();
      p.required.emplace_back(artifacts::kTopicAssignments, Stage::Topics);
      p.required.emplace_back(artifacts::kTopicModel, Stage::Topics);
      p.params["subgroup_attribute"] = config_.subgroup_attribute;
      break;
    case Stage::Report:
      for (const char* rel : {artifacts::kPromptScores, artifacts::kExtractScores, artifacts::kAnnotationSummary,
                              artifacts::kLearningCurve, artifacts::kGridSelections, artifacts::kTopicKeywords,
                              artifacts::kEnrichmentTable, artifacts::kCohortTable, artifacts::kPairMatrix}) {
        p.optional_inputs.emplace_back(rel);
      }
      break;
  }
  return p;
}

RunReport Runner::run(const std::vector<Stage>& requested) {
  config_.validate();
  DirectoryLock lock(out_);
  const fs::path manifest_path = out_ / artifacts::kManifest;
  std::map<Stage, Json> previous;
  if (fs::exists(manifest_path)) {
    Json old = Json::parse(read_text_file(manifest_path), nullptr, false);
    if (old.is_object() && old.value("artifact_version", 0) == kArtifactVersion && old.contains("stages")) {
      for (const auto& s : old["stages"]) {
        if (auto st = parse_stage(s.value("stage", ""))) previous[*st] = s;
      }
    }
  }

  std::set<Stage> wanted(requested.begin(), requested.end());
  RunReport report;
  for (Stage stage : kAllStages) {
    if (!wanted.contains(stage)) continue;
    StagePlan p = plan(stage);
    for (const auto& [rel, producer] : p.required) {
      if (!fs::exists(out_ / rel)) {
        throw Error("stage '" + std::string(to_string(stage)) + "' needs " + rel + "; run stage '" +
                    std::string(to_string(producer)) + "' first");
      }
    }
    StageRecord record;
    record.fingerprint = sha256_hex(p.params.dump());
    record.inputs = p.external_inputs;
    for (const auto& [rel, producer] : p.required) record.inputs[rel] = sha256_file(out_ / rel);
    for (const auto& rel : p.optional_inputs) {
      if (fs::exists(out_ / rel)) record.inputs[rel] = sha256_file(out_ / rel);
    }

    StageOutcome outcome;
    outcome.stage = stage;
    bool unchanged = false;
    if (auto it = previous.find(stage); it != previous.end()) {
      const Json& old = it->second;
      unchanged = old.value("fingerprint", "") == record.fingerprint &&
                  old.value("inputs", Json::object()) == Json(record.inputs) && old.contains("outputs");
      if (unchanged) {
        for (const auto& [rel, hash] : old["outputs"].items()) {
          if (!fs::exists(out_ / rel) || sha256_file(out_ / rel) != hash.get<std::string>()) {
            unchanged = false;
            break;
          }
        }
      }
      if (unchanged && stage == Stage::Report) report_exit_ = old.value("exit_status", 0);
    }

    if (unchanged) {
      outcome.skipped = true;
      const Json& old = previous[stage];
      for (const auto& [rel, hash] : old["outputs"].items()) outcome.outputs.push_back(rel);
      outcome.warnings = old.value("warnings", std::vector<std::string>{});
      outcome.wall_time_ms = old.value("wall_time_ms", 0.0);
      if (log_) *log_ << "[" << to_string(stage) << "] unchanged, skipped\n";
    } else {
      const auto t0 = std::chrono::steady_clock::now();
      execute(stage, record);
      record.wall_time_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      Json entry = {{"stage", std::string(to_string(stage))},
                    {"fingerprint", record.fingerprint},
                    {"inputs", record.inputs},
                    {"outputs", record.outputs},
                    {"warnings", record.warnings},
                    {"wall_time_ms", record.wall_time_ms}};
      if (stage == Stage::Report) entry["exit_status"] = report_exit_;
      previous[stage] = entry;
      for (const auto& [rel, hash] : record.outputs) outcome.outputs.push_back(rel);
      outcome.warnings = record.warnings;
      outcome.wall_time_ms = record.wall_time_ms;
      if (log_) {
        for (const auto& w : record.warnings) *log_ << "[" << to_string(stage) << "] warning: " << w << '\n';
        *log_ << "[" << to_string(stage) << "] done in " << fmt(record.wall_time_ms, 1) << " ms\n";
      }
    }
    report.stages.push_back(std::move(outcome));

    Json manifest = {{"artifact_version", kArtifactVersion}, {"seed", config_.seed}, {"stages", Json::array()}};
    for (Stage s : kAllStages) {
      if (auto it = previous.find(s); it != previous.end()) manifest["stages"].push_back(it->second);
    }
    write_text_file(manifest_path, json_text(manifest));
    report.manifest = std::move(manifest);
  }
  report.exit_status = wanted.contains(Stage::Report) ? report_exit_ : 0;
  return report;
}

void Runner::execute(Stage stage, StageRecord& r) {
  switch (stage) {
    case Stage::Generate: return stage_generate(r);
    case Stage::Detect: return stage_detect(r);
    case Stage::EvaluatePrompts: return stage_evaluate_prompts(r);
    case Stage::Extract: return stage_extract(r);
    case Stage::Baselines: return stage_baselines(r);
    case Stage::Topics: return stage_topics(r);
    case Stage::Enrich: return stage_enrich(r);
    case Stage::Report: return stage_report(r);
  }
}

void Runner::stage_generate(StageRecord& r) {
  corpus::Corpus corpus;
  if (config_.corpus_dir) {
    auto loaded = corpus::load_corpus(*config_.corpus_dir);
    for (const auto& m : loaded.malformed) {
      r.warnings.push_back("skipped malformed line " + std::to_string(m.line_number) + " of " +
                           m.file.filename().string() + ": " + m.message);
    }
    corpus = std::move(loaded.corpus);
  } else {
    corpus = corpus::generate_synthetic_corpus(config_.generator, derive_seed(config_.seed, "generate"));
  }
  const fs::path dir = out_ / artifacts::kCorpusDir;
  corpus::write_corpus(dir, corpus);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path().filename().string());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) r.outputs[std::string(artifacts::kCorpusDir) + "/" + f] = sha256_file(dir / f);
}

void Runner::stage_detect(StageRecord& r) {
  const auto corpus = load_run_corpus(r);
  const auto cohort = switching::filter_orders(corpus, lexicon(), config_.filter);
  const auto events = switching::detect_switches(cohort);
  std::vector<Json> records;
  records.reserve(events.size());
  for (const auto& e : events) records.push_back(switching::to_json(e));
  write_records(r, artifacts::kEvents, records);
  write(r, artifacts::kFilterReport, json_text(to_json(cohort.report)));

  const auto summary = switching::summarize_cohort(corpus, cohort, events);
  write(r, artifacts::kCohortTable, switching::render_demographics_table(summary));
  write(r, artifacts::kPairMatrix, switching::render_pair_matrix(summary));
  write(r, artifacts::kCohortSummary, json_text(to_json(summary)));

  const auto split = choose_dev_split(events, config_.dev_fraction, derive_seed(config_.seed, "dev-split"));
  if (split.dev_notes.empty()) r.warnings.push_back("no switch events; the dev split is empty");
  write(r, artifacts::kSplit, json_text(to_json(split)));
}

std::vector<extraction::ExtractionResult> Runner::run_extraction(const corpus::Corpus& corpus,
                                                                 const std::vector<std::string>& note_ids,
                                                                 const extraction::PromptSpec& spec) {
  std::vector<corpus::ClinicalNote> notes;
  notes.reserve(note_ids.size());
  for (const auto& id : note_ids) {
    const auto* n = corpus.find_note(id);
    if (n == nullptr) throw Error("switch event references unknown note " + id);
    notes.push_back(*n);
  }
  const auto pc = provider_config();
  auto provider = extraction::make_provider(pc, &corpus);
  return extraction::extract_switch_info(notes, spec, pc, *provider, lexicon());
}

void Runner::stage_evaluate_prompts(StageRecord& r) {
  const auto corpus = load_run_corpus(r);
  const auto events = load_events();
  const auto split = load_split();
  std::map<std::string, const switching::SwitchEvent*> event_of_note;
  for (const auto& e : events) event_of_note[e.note_id] = &e;

  std::vector<PromptScore> scores;
  std::ostringstream table;
  table << "prompt_id\tsystem_role\toutput_format\treference\tstarted_f1\tstopped_f1\tmean_f1\tn_notes\tn_errors\n";
  std::string reference;
  for (const auto& spec : prompts()) {
    const auto results = run_extraction(corpus, split.dev_notes, spec);
    std::vector<Json> records;
    for (const auto& res : results) records.push_back(extraction::to_json(res));
    write_records(r, artifacts::dev_prompt(spec.prompt_id), records);

    const auto s = score_extractions(results, corpus, event_of_note);
    PromptScore ps{spec.prompt_id, s.silver_started_f1, s.silver_stopped_f1};
    reference = "silver";
    if (s.gold_started_f1) {
      ps.started_f1 = *s.gold_started_f1;
      ps.stopped_f1 = *s.gold_stopped_f1;
      reference = "gold";
    }
    scores.push_back(ps);
    table << spec.prompt_id << '\t' << to_string(spec.system_role) << '\t' << to_string(spec.output_format) << '\t'
          << reference << '\t' << fmt(ps.started_f1) << '\t' << fmt(ps.stopped_f1) << '\t' << fmt(ps.mean()) << '\t'
          << results.size() << '\t' << s.n_errors << '\n';
  }
  write(r, artifacts::kPromptScores, table.str());
  const int best = select_best_prompt(scores);
  const auto& chosen = *std::find_if(scores.begin(), scores.end(), [&](const auto& s) { return s.prompt_id == best; });
  write(r, artifacts::kBestPrompt,
        json_text({{"prompt_id", best},
                   {"reference", reference},
                   {"started_f1", chosen.started_f1},
                   {"stopped_f1", chosen.stopped_f1},
                   {"mean_f1", chosen.mean()},
                   {"n_dev_notes", split.dev_notes.size()}}));
}

void Runner::stage_extract(StageRecord& r) {
  const auto corpus = load_run_corpus(r);
  const auto events = load_events();
  const auto split = load_split();
  const int best = Json::parse(read_text_file(out_ / artifacts::kBestPrompt)).at("prompt_id").get<int>();
  const auto& all = prompts();
  auto spec = std::find_if(all.begin(), all.end(), [&](const auto& s) { return s.prompt_id == best; });
  if (spec == all.end()) throw Error("best prompt " + std::to_string(best) + " is not among the configured prompts");

  const auto results = run_extraction(corpus, split.test_notes, *spec);
  std::vector<Json> records;
  for (const auto& res : results) records.push_back(extraction::to_json(res));
  write_records(r, artifacts::kExtractions, records);

  std::map<std::string, const switching::SwitchEvent*> event_of_note;
  for (const auto& e : events) event_of_note[e.note_id] = &e;
  const auto scores = score_extractions(results, corpus, event_of_note);
  Json scores_json = to_json(scores);
  scores_json["prompt_id"] = best;
  write(r, "extract/scores.json", json_text(scores_json));
  write(r, artifacts::kExtractScores, render_scores_table(scores));
  if (scores.n_errors > 0) r.warnings.push_back(std::to_string(scores.n_errors) + " notes could not be extracted");

  // Simulated reviewer verdicts need gold labels; real corpora are reviewed
  // through the review service instead.
  std::vector<metrics::AnnotationVerdict> verdicts;
  for (const auto& res : results) {
    const auto* gold = corpus.find_gold(res.note_id);
    const auto* note = corpus.find_note(res.note_id);
    if (gold != nullptr && note != nullptr) verdicts.push_back(extraction::auto_verdict(res, *note, *gold));
  }
  if (!verdicts.empty() && verdicts.size() == results.size()) {
    std::vector<Json> vrecords;
    for (const auto& v : verdicts) vrecords.push_back(extraction::to_json(v));
    write_records(r, artifacts::kVerdicts, vrecords);
    const auto summary = metrics::annotation_summary(verdicts);
    std::size_t started_ok = 0, stopped_ok = 0;
    for (const auto& v : verdicts) {
      started_ok += v.started_correct;
      stopped_ok += v.stopped_correct;
    }
    write(r, artifacts::kAnnotationSummary,
          json_text({{"source", "simulated"},
                     {"n", summary.n},
                     {"reason_accuracy", opt_json(summary.accuracy)},
                     {"hallucination_rate", opt_json(summary.hallucination_rate)},
                     {"started_correct_rate", static_cast<double>(started_ok) / static_cast<double>(summary.n)},
                     {"stopped_correct_rate", static_cast<double>(stopped_ok) / static_cast<double>(summary.n)}}));
  } else {
    std::error_code ec;
    fs::remove(out_ / artifacts::kVerdicts, ec);
    fs::remove(out_ / artifacts::kAnnotationSummary, ec);
    r.warnings.push_back("corpus has no gold labels; simulated verdicts skipped");
  }
}

void Runner::stage_baselines(StageRecord& r) {
  const auto corpus = load_run_corpus(r);
  const auto events = load_events();
  const auto split = load_split();
  const std::set<std::string> dev(split.dev_patients.begin(), split.dev_patients.end());
  const auto notes = baselines::labeled_notes(corpus, events, dev);
  auto options = config_.baselines;
  options.seed = derive_seed(config_.seed, "baselines");
  const auto result = baselines::evaluate_learning_curve(notes, options);
  write(r, artifacts::kLearningCurve, baselines::render_learning_curve_table(result.cells));
  write(r, artifacts::kGridSelections, render_selections(result.selections));
  Json splits = Json::array();
  for (std::size_t i = 0; i < result.splits.size(); ++i) {
    splits.push_back({{"repeat", i},
                      {"train", result.splits[i].train},
                      {"validation", result.splits[i].validation},
                      {"test", result.splits[i].test}});
  }
  write(r, "baselines/splits.json", json_text(splits));
  for (const auto& c : result.cells) {
    if (!c.mean_f1) {
      r.warnings.push_back("no score for " + std::string(baselines::to_string(c.task)) + "/" +
                           std::string(baselines::to_string(c.model)) + "/" +
                           std::string(baselines::to_string(c.scheme)) + " at fraction " + fmt(c.fraction, 2));
    }
  }
}

void Runner::stage_topics(StageRecord& r) {
  std::vector<std::string> ids, reasons;
  for (const auto& res : load_results(artifacts::kExtractions)) {
    if (res.error) continue;
    ids.push_back(res.note_id);
    reasons.push_back(res.reason);
  }
  if (ids.empty()) throw Error("stage 'topics' found no successful extractions in " + std::string(artifacts::kExtractions));

  const auto& t = config_.topics;
  topics::TopicOptions options;
  options.pca_components = t.pca_components;
  options.hdbscan.min_cluster_size = t.min_cluster_size;
  options.hdbscan.min_samples = t.min_samples;
  options.tau = t.tau;
  options.top_n = t.top_n;
  options.embedding = t.embedding;
  if (options.embedding.provider == "remote" && options.embedding.checkpoint.empty()) {
    options.embedding.checkpoint = out_ / "topics/embedding_checkpoint.jsonl";
  }
  auto model = topics::fit_topics(ids, reasons, options);
  if (t.grouping) {
    try {
      model = topics::group_topics(model, topics::load_grouping(*t.grouping), t.top_n);
    } catch (const InvalidInput& e) {
      model.warnings.push_back(std::string("grouping map not applied: ") + e.what());
    }
  }
  for (const auto& w : model.warnings) r.warnings.push_back(w);

  std::vector<Json> records;
  for (std::size_t i = 0; i < model.note_ids.size(); ++i) {
    Json rec = {{"note_id", model.note_ids[i]}, {"reason", model.documents[i]}, {"topic", model.labels[i]}};
    if (auto n = model.topic_names.find(model.labels[i]); n != model.topic_names.end()) rec["topic_name"] = n->second;
    rec["weights"] = model.weights[i];
    records.push_back(std::move(rec));
  }
  write_records(r, artifacts::kTopicAssignments, records);
  write(r, artifacts::kTopicKeywords, topics::render_keyword_table(model));
  write(r, artifacts::kTopicModel, json_text(topics::to_json(model)));
}

void Runner::stage_enrich(StageRecord& r) {
  const auto corpus = load_run_corpus(r);
  const Json model_json = Json::parse(read_text_file(out_ / artifacts::kTopicModel));
  topics::TopicModel model;
  model.n_topics = model_json.at("n_topics").get<int>();
  std::vector<std::string> subgroup;
  for (const auto& rec : read_jsonl(out_ / artifacts::kTopicAssignments)) {
    const std::string id = rec.at("note_id").get<std::string>();
    model.note_ids.push_back(id);
    model.labels.push_back(rec.at("topic").get<int>());
    model.weights.push_back(rec.at("weights").get<std::vector<double>>());
    const auto* note = corpus.find_note(id);
    const auto* patient = note ? corpus.find_patient(note->patient_id) : nullptr;
    subgroup.push_back(patient ? subgroup_of(*patient, config_.subgroup_attribute) : std::string());
  }
  const auto matrix = topics::enrichment_for_model(model, subgroup, subgroup_order(config_.subgroup_attribute));
  write(r, artifacts::kEnrichmentTable, topics::render_enrichment_table(matrix));
  Json j = topics::to_json(matrix);
  j["subgroup_attribute"] = config_.subgroup_attribute;
  write(r, artifacts::kEnrichmentJson, json_text(j));
  if (matrix.topics.empty()) r.warnings.push_back("no clustered notes; enrichment is empty");
}

void Runner::stage_report(StageRecord& r) {
  const auto result = report::emit_report(out_);
  for (const auto& rel : result.files) r.outputs[rel] = sha256_file(out_ / rel);
  for (const auto& c : result.charts) {
    if (!c.rendered) r.warnings.push_back(c.name + ": " + c.note);
  }
  report_exit_ = result.exit_status;
}

}  // namespace

RunReport run_pipeline(const PipelineConfig& config, const std::vector<Stage>& stages, std::ostream* log) {
  Runner runner(config, log);
  return runner.run(stages);
}

}  // namespace switchminer::pipeline
