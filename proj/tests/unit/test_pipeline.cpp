#include <set>
#include <sstream>

#include "doctest.h"
#include "switchminer/config.hpp"
#include "switchminer/error.hpp"
#include "switchminer/jsonl.hpp"
#include "switchminer/pipeline.hpp"
#include "test_support.hpp"

using namespace switchminer;
using namespace switchminer::pipeline;

namespace {

// Enough patients that the baselines stage sees well over 50 labeled notes.
constexpr int kPatients = 1500;

std::vector<Stage> stages(const char* list) { return parse_stage_list(list); }

Json read_json(const std::filesystem::path& p) { return Json::parse(read_text_file(p)); }

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("stage names parse in execution order") {
  CHECK(parse_stage("evaluate-prompts") == Stage::EvaluatePrompts);
  CHECK(parse_stage("evaluate_prompts") == Stage::EvaluatePrompts);
  CHECK_FALSE(parse_stage("bogus"));
  CHECK(parse_stage_list("detect,generate") == std::vector<Stage>{Stage::Generate, Stage::Detect});
  CHECK(parse_stage_list("all").size() == kAllStages.size());
  CHECK_THROWS_AS(parse_stage_list("generate,bogus"), InvalidInput);
}

TEST_CASE("generate and detect record two entries and a rerun skips both") {
  testing::TempDir dir("pipe");
  auto cfg = testing::small_pipeline_config(dir.path(), 300);
  auto first = run_pipeline(cfg, stages("generate,detect"));
  REQUIRE(first.stages.size() == 2);
  CHECK_FALSE(first.stages[0].skipped);
  CHECK(first.manifest["stages"].size() == 2);
  CHECK(std::filesystem::exists(dir / artifacts::kEvents));
  CHECK(std::filesystem::exists(dir / artifacts::kSplit));

  auto second = run_pipeline(cfg, stages("generate,detect"));
  CHECK(second.stages[0].skipped);
  CHECK(second.stages[1].skipped);
  CHECK(manifest_digest(first.manifest) == manifest_digest(second.manifest));

  // A changed detection parameter reruns detect only.
  cfg.filter.min_tokens = 10;
  auto third = run_pipeline(cfg, stages("generate,detect"));
  CHECK(third.stages[0].skipped);
  CHECK_FALSE(third.stages[1].skipped);
}

TEST_CASE("a missing input names the stage to run first") {
  testing::TempDir dir("pipe");
  auto cfg = testing::small_pipeline_config(dir.path(), 100);
  try {
    run_pipeline(cfg, stages("detect"));
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("stage 'detect' needs") != std::string::npos);
    CHECK(msg.find("run stage 'generate' first") != std::string::npos);
  }
}

TEST_CASE("noise-free mock scores every prompt perfectly and picks prompt 1") {
  testing::TempDir dir("pipe");
  auto cfg = testing::small_pipeline_config(dir.path(), 1000);
  cfg.dev_fraction = 0.2;
  run_pipeline(cfg, stages("generate,detect,evaluate_prompts"));
  const auto best = read_json(dir / artifacts::kBestPrompt);
  CHECK(best.at("prompt_id").get<int>() == 1);
  CHECK(best.at("reference").get<std::string>() == "gold");
  CHECK(best.at("started_f1").get<double>() == 1.0);
  CHECK(best.at("stopped_f1").get<double>() == 1.0);
  const auto table = read_text_file(dir / artifacts::kPromptScores);
  std::istringstream in(table);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.find("\t1.0000\t1.0000") != std::string::npos);
  }
  CHECK(rows == 6);
}

TEST_CASE("best prompt tie-break goes to the lowest id") {
  CHECK(select_best_prompt({{3, 0.9, 0.9}, {2, 0.9, 0.9}, {5, 0.8, 1.0}}) == 2);
  CHECK(select_best_prompt({{1, 0.5, 0.5}, {4, 0.6, 0.6}}) == 4);
  CHECK_THROWS(select_best_prompt({}));
}

TEST_CASE("dev split size and disjointness") {
  std::vector<switching::SwitchEvent> events;
  for (int i = 0; i < 40; ++i) {
    switching::SwitchEvent e;
    e.patient_id = "p" + std::to_string(i % 20);
    e.note_id = "n" + std::to_string(i);
    events.push_back(e);
  }
  const auto s = choose_dev_split(events, 0.05, 9);
  CHECK(s.dev_patients.size() == 1);
  CHECK(s.dev_notes.size() == 2);
  CHECK(s.test_notes.size() == 38);
  CHECK(choose_dev_split(events, 0.26, 9).dev_patients.size() == 6);
  const auto again = choose_dev_split(events, 0.05, 9);
  CHECK(again.dev_patients == s.dev_patients);
  CHECK(dev_split_from_json(to_json(s)).test_notes == s.test_notes);
  CHECK_THROWS_AS(choose_dev_split(events, 1.0, 9), InvalidInput);
}

TEST_CASE("a full mock run keeps dev notes out of downstream artifacts") {
  testing::TempDir dir("pipe");
  auto cfg = testing::small_pipeline_config(dir.path(), kPatients);
  auto report = run_pipeline(cfg, stages("all"));
  CHECK(report.stages.size() == kAllStages.size());
  CHECK(report.exit_status == 0);

  const auto split = dev_split_from_json(read_json(dir / artifacts::kSplit));
  REQUIRE_FALSE(split.dev_notes.empty());
  const std::set<std::string> dev_notes(split.dev_notes.begin(), split.dev_notes.end());
  const std::set<std::string> dev_patients(split.dev_patients.begin(), split.dev_patients.end());
  for (const auto& rec : read_jsonl(dir / artifacts::kExtractions)) {
    CHECK_FALSE(dev_notes.contains(rec.at("note_id").get<std::string>()));
  }
  for (const auto& rec : read_jsonl(dir / artifacts::kTopicAssignments)) {
    CHECK_FALSE(dev_notes.contains(rec.at("note_id").get<std::string>()));
  }
  for (const auto& rep : read_json(dir / "baselines/splits.json")) {
    for (const char* side : {"train", "validation", "test"}) {
      for (const auto& p : rep.at(side)) CHECK_FALSE(dev_patients.contains(p.get<std::string>()));
    }
  }
  for (const char* rel : {artifacts::kLearningCurve, artifacts::kEnrichmentTable, artifacts::kAnnotationSummary}) {
    CHECK(std::filesystem::exists(dir / rel));
  }
  CHECK(std::filesystem::exists(dir / artifacts::kReportDir / "index.html"));
}

TEST_CASE("reruns are reproducible across output directories") {
  testing::TempDir a("pipe"), b("pipe");
  const auto ra = run_pipeline(testing::small_pipeline_config(a.path(), kPatients), stages("all"));
  const auto rb = run_pipeline(testing::small_pipeline_config(b.path(), kPatients), stages("all"));
  CHECK(manifest_digest(ra.manifest) == manifest_digest(rb.manifest));
  const auto rc = run_pipeline(testing::small_pipeline_config(b.path(), kPatients), stages("all"));
  for (const auto& s : rc.stages) CHECK(s.skipped);
}

TEST_CASE("the output directory lock is exclusive") {
  testing::TempDir dir("pipe");
  {
    DirectoryLock lock(dir.path());
    CHECK(std::filesystem::exists(dir / ".lock"));
    CHECK_THROWS_AS(DirectoryLock(dir.path()), Error);
    CHECK_THROWS_AS(run_pipeline(testing::small_pipeline_config(dir.path(), 50), stages("generate")), Error);
  }
  CHECK_FALSE(std::filesystem::exists(dir / ".lock"));
  DirectoryLock again(dir.path());
}

TEST_CASE("config validation rejects out-of-range values") {
  testing::TempDir dir("pipe");
  auto ok = testing::small_pipeline_config(dir.path(), 50);
  CHECK_NOTHROW(ok.validate());
  auto bad = ok;
  bad.dev_fraction = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = ok;
  bad.subgroup_attribute = "zip";
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = ok;
  bad.lexicon = dir / "missing.tsv";
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = ok;
  bad.topics.min_cluster_size = 1;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = ok;
  bad.baselines.repeats = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("config JSON round trip and relative paths") {
  testing::TempDir dir("pipe");
  write_text_file(dir / "lex.tsv", std::string(switching::ModalityLexicon::builtin_text()));
  const Json j = {{"seed", 11}, {"lexicon", "lex.tsv"}, {"dev_fraction", 0.1}, {"provider", {{"endpoint", "mock"}}}};
  const auto c = pipeline_config_from_json(j, dir.path());
  CHECK(c.seed == 11);
  REQUIRE(c.lexicon);
  CHECK(*c.lexicon == dir / "lex.tsv");
  const auto back = pipeline_config_from_json(to_json(c));
  CHECK(back.dev_fraction == doctest::Approx(0.1));
  CHECK(to_json(back) == to_json(c));
  write_text_file(dir / "bad.json", "[1, 2]");
  CHECK_THROWS_AS(load_pipeline_config(dir / "bad.json"), InvalidInput);
}

}  // TEST_SUITE
