#include <set>

#include "doctest.h"
#include "switchminer/corpus.hpp"
#include "switchminer/error.hpp"
#include "switchminer/generator.hpp"
#include "switchminer/jsonl.hpp"
#include "switchminer/lexicon.hpp"
#include "switchminer/switching.hpp"
#include "test_support.hpp"

using namespace switchminer;
using namespace switchminer::corpus;

namespace {

Corpus tiny_corpus() {
  Corpus c;
  c.patients.push_back({"p1", Date(1995, 5, 1), RaceEthnicity::Latinx, Language::Spanish});
  c.notes.push_back({"n1", "p1", Date(2020, 1, 10), "First visit note."});
  c.notes.push_back({"n2", "p1", Date(2020, 9, 10), "Second visit note."});
  c.orders.push_back({"o1", "p1", Date(2020, 1, 10), "norethindrone 0.35 mg tablet", "n1"});
  c.orders.push_back({"o2", "p1", Date(2020, 9, 10), "Mirena 52 mg intrauterine system", "n2"});
  c.last_encounter_date["p1"] = Date(2021, 1, 1);
  return c;
}

bool has_rule(const std::vector<Finding>& findings, const std::string& rule, const std::string& id = {}) {
  for (const auto& f : findings) {
    if (f.rule == rule && (id.empty() || f.record_id == id)) return true;
  }
  return false;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("empty files load to an empty corpus") {
  testing::TempDir dir("corpus");
  for (const char* f : {"patients.jsonl", "orders.jsonl", "notes.jsonl"}) write_text_file(dir / f, "");
  auto r = load_corpus(dir.path());
  CHECK(r.corpus.patients.empty());
  CHECK(r.corpus.orders.empty());
  CHECK_FALSE(r.corpus.gold);
}

TEST_CASE("small corpus round trips through files") {
  testing::TempDir dir("corpus");
  const Corpus c = tiny_corpus();
  write_corpus(dir.path(), c);
  auto r = load_corpus(dir.path());
  CHECK(r.corpus.patients.size() == 1);
  CHECK(r.corpus.orders.size() == 2);
  CHECK(r.corpus.notes.size() == 2);
  CHECK(r.corpus == c);
  CHECK(r.malformed.empty());
}

TEST_CASE("unresolved note reference names the id") {
  testing::TempDir dir("corpus");
  Corpus c = tiny_corpus();
  c.orders[1].note_id = "n999";
  write_corpus(dir.path(), c);
  try {
    load_corpus(dir.path());
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(has_rule(e.findings(), "order_note_ref", "n999"));
    CHECK(std::string(e.what()).find("n999") != std::string::npos);
  }
}

TEST_CASE("missing required file and unknown schema are fatal") {
  testing::TempDir dir("corpus");
  write_text_file(dir / "patients.jsonl", "");
  CHECK_THROWS_AS(load_corpus(dir.path()), IoError);
  CHECK_THROWS_AS(load_corpus(dir.path(), "99"), InvalidInput);
}

TEST_CASE("malformed lines are collected with line numbers") {
  testing::TempDir dir("corpus");
  write_corpus(dir.path(), tiny_corpus());
  std::string notes = read_text_file(dir / "notes.jsonl");
  write_text_file(dir / "notes.jsonl", notes + "{broken\n");
  auto r = load_corpus(dir.path());
  REQUIRE(r.malformed.size() == 1);
  CHECK(r.malformed[0].line_number == 3);
}

TEST_CASE("validate_corpus findings") {
  Corpus c = tiny_corpus();
  CHECK(validate_corpus(c).empty());

  Corpus dup = c;
  dup.notes.push_back(dup.notes[0]);
  auto f = validate_corpus(dup);
  CHECK(std::count_if(f.begin(), f.end(), [](const Finding& x) { return x.rule == "unique_note_id"; }) == 1);

  Corpus undated = c;
  undated.orders[0].encounter_date.reset();
  auto g = validate_corpus(undated);
  REQUIRE(has_rule(g, "missing_start_date", "o1"));
  for (const auto& x : g) {
    if (x.rule == "missing_start_date") CHECK(x.severity == Severity::Warning);
  }
}

TEST_CASE("generator is deterministic and seed sensitive") {
  GeneratorConfig cfg;
  cfg.n_patients = 200;
  const auto a = generate_synthetic_corpus(cfg, 5);
  const auto b = generate_synthetic_corpus(cfg, 5);
  CHECK(corpus_hash(a) == corpus_hash(b));
  testing::TempDir d1("gen"), d2("gen");
  write_corpus(d1.path(), a);
  write_corpus(d2.path(), b);
  for (const char* f : {"patients.jsonl", "orders.jsonl", "notes.jsonl", "gold.jsonl"}) {
    CHECK(read_text_file(d1 / f) == read_text_file(d2 / f));
  }
  cfg.n_patients = 20;
  std::set<std::string> hashes;
  for (std::uint64_t s = 0; s < 200; ++s) hashes.insert(corpus_hash(generate_synthetic_corpus(cfg, s)));
  CHECK(hashes.size() == 200);
}

TEST_CASE("generator switch fraction follows switch_rate") {
  GeneratorConfig cfg;
  cfg.n_patients = 1000;
  const auto c = generate_synthetic_corpus(cfg, 7);
  const auto cohort = switching::filter_orders(c, switching::ModalityLexicon::builtin());
  const auto events = switching::detect_switches(cohort);
  std::set<std::string> switchers;
  for (const auto& e : events) switchers.insert(e.patient_id);
  const double frac = static_cast<double>(switchers.size()) / 1000.0;
  CHECK(frac >= 0.056);
  CHECK(frac <= 0.096);

  cfg.n_patients = 10;
  cfg.switch_rate = 0.0;
  const auto none = generate_synthetic_corpus(cfg, 7);
  CHECK(none.patients.size() == 10);
  CHECK(switching::detect_switches(switching::filter_orders(none, switching::ModalityLexicon::builtin())).empty());
}

TEST_CASE("gold labels resolve and match the lexicon on embedded drug names") {
  GeneratorConfig cfg;
  cfg.n_patients = 500;
  const auto c = generate_synthetic_corpus(cfg, 11);
  REQUIRE(c.gold);
  REQUIRE_FALSE(c.gold->empty());
  const auto& lex = switching::ModalityLexicon::builtin();
  for (const auto& g : *c.gold) {
    const auto* note = c.find_note(g.note_id);
    REQUIRE(note);
    if (!g.started_raw.empty()) {
      CHECK(note->text.find(g.started_raw) != std::string::npos);
      auto m = lex.map(g.started_raw);
      CHECK(m.kind == switching::MatchKind::Matched);
      CHECK(g.started.contains(m.modality));
    }
    if (!g.stopped_raw.empty()) {
      CHECK(note->text.find(g.stopped_raw) != std::string::npos);
      CHECK(g.stopped.contains(lex.map(g.stopped_raw).modality));
    }
    CHECK(note->text.find(g.reason_text) != std::string::npos);
  }
}

TEST_CASE("planted 60/40 race mixture is reproduced") {
  GeneratorConfig cfg;
  cfg.n_patients = 2000;
  cfg.race_weights = {0.6, 0.0, 0.0, 0.4, 0.0, 0.0, 0.0};
  cfg.validate();
  const auto c = generate_synthetic_corpus(cfg, 3);
  int white = 0, asian = 0;
  for (const auto& p : c.patients) {
    white += p.race_ethnicity == RaceEthnicity::White;
    asian += p.race_ethnicity == RaceEthnicity::Asian;
  }
  CHECK(std::abs(white / 2000.0 - 0.6) <= 0.03);
  CHECK(std::abs(asian / 2000.0 - 0.4) <= 0.03);
}

TEST_CASE("invalid mixtures and rates are rejected") {
  GeneratorConfig cfg;
  cfg.race_weights[0] += 0.01;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  GeneratorConfig rate;
  rate.switch_rate = 1.5;
  CHECK_THROWS_AS(rate.validate(), InvalidInput);
}

TEST_CASE("generator config json round trip") {
  GeneratorConfig cfg;
  cfg.n_patients = 321;
  cfg.topic_multipliers[RaceEthnicity::Asian][9] = 3.0;
  const auto back = generator_config_from_json(to_json(cfg));
  CHECK(back.n_patients == 321);
  CHECK(back.topic_multipliers.at(RaceEthnicity::Asian).at(9) == 3.0);
  CHECK(to_json(back) == to_json(cfg));
}

}  // TEST_SUITE
