#include <set>

#include "doctest.h"
#include "switchminer/error.hpp"
#include "switchminer/generator.hpp"
#include "switchminer/jsonl.hpp"
#include "switchminer/lexicon.hpp"
#include "switchminer/switching.hpp"
#include "test_support.hpp"

using namespace switchminer;
using namespace switchminer::switching;
using corpus::Corpus;

namespace {

std::string words(int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += "word" + std::to_string(i % 7) + " ";
  return s;
}

/// One patient with dated orders, each on its own long note.
Corpus corpus_with_orders(const std::vector<std::pair<Date, std::string>>& orders, Date last_encounter,
                          int note_tokens = 60) {
  Corpus c;
  c.patients.push_back({"p1", Date(1990, 1, 1), corpus::RaceEthnicity::White, corpus::Language::English});
  int i = 0;
  for (const auto& [d, name] : orders) {
    const std::string nid = "n" + std::to_string(i);
    c.notes.push_back({nid, "p1", d, words(note_tokens)});
    c.orders.push_back({"o" + std::to_string(i), "p1", d, name, nid});
    ++i;
  }
  c.last_encounter_date["p1"] = last_encounter;
  return c;
}

TimelineEncounter enc(int day, ModalitySet m) { return {Date(day), m, "n" + std::to_string(day)}; }

const ModalityLexicon& lex() { return ModalityLexicon::builtin(); }

}  // namespace

TEST_SUITE("switching") {

TEST_CASE("lexicon maps the documented examples") {
  auto iud = lex().map("Mirena 52 mg intrauterine system");
  CHECK(iud.kind == MatchKind::Matched);
  CHECK(iud.modality == Modality::IUD);
  CHECK(lex().map("levonorgestrel 1.5 mg tablet (emergency)").kind == MatchKind::Excluded);
  CHECK(lex().map("ibuprofen 600 mg").kind == MatchKind::Unmatched);
  CHECK(map_to_modality("NUVARING vaginal ring", lex()).modality == Modality::Intravaginal);
}

TEST_CASE("every generator drug name matches exactly one inclusion modality") {
  for (const auto& d : corpus::builtin_drug_names()) {
    for (const std::string& name : {d.order_name, d.note_name}) {
      INFO(name);
      auto m = lex().map(name);
      CHECK(m.kind == MatchKind::Matched);
      CHECK(m.modality == d.modality);
      CHECK(lex().all_matches(name).size() == 1);
    }
  }
}

TEST_CASE("shipped lexicon file equals the builtin") {
  const std::string file = read_text_file(testing::data_dir() / "lexicon.tsv");
  CHECK(file == std::string(ModalityLexicon::builtin_text()));
  CHECK(ModalityLexicon::load(testing::data_dir() / "lexicon.tsv").entries().size() == lex().entries().size());
}

TEST_CASE("lexicon parse errors name the line") {
  try {
    ModalityLexicon::parse("# comment\nOral\tpill\nCondom\tcondom\n");
    FAIL("expected InvalidInput");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
  CHECK_THROWS_AS(ModalityLexicon::parse("Oral\t([unclosed\n"), InvalidInput);
}

TEST_CASE("duplicate modality on one date collapses") {
  auto c = corpus_with_orders({{Date(2020, 1, 1), "norethindrone 0.35 mg tablet"},
                               {Date(2020, 1, 1), "Sprintec 28 tablet"}},
                              Date(2021, 1, 1));
  auto f = filter_orders(c, lex());
  CHECK(f.report.duplicates == 1);
  CHECK(f.report.retained_orders == 1);
}

TEST_CASE("note with exactly fifty tokens is dropped") {
  auto c = corpus_with_orders({{Date(2020, 1, 1), "Sprintec 28 tablet"}}, Date(2021, 1, 1), 50);
  auto f = filter_orders(c, lex());
  CHECK(f.report.short_note == 1);
  CHECK(f.report.retained_orders == 0);
  auto c51 = corpus_with_orders({{Date(2020, 1, 1), "Sprintec 28 tablet"}}, Date(2021, 1, 1), 51);
  CHECK(filter_orders(c51, lex()).report.retained_orders == 1);
}

TEST_CASE("short follow-up drops the patient") {
  auto c = corpus_with_orders({{Date(2020, 1, 1), "Sprintec 28 tablet"}}, Date(2020, 1, 1).plus_days(120));
  auto f = filter_orders(c, lex());
  CHECK(f.report.no_followup == 1);
  CHECK(f.timelines.empty());
}

TEST_CASE("missing date, missing note, excluded and unmatched orders are counted") {
  auto c = corpus_with_orders({{Date(2020, 1, 1), "Sprintec 28 tablet"},
                               {Date(2020, 2, 1), "levonorgestrel 1.5 mg tablet (emergency)"},
                               {Date(2020, 3, 1), "ibuprofen 600 mg"}},
                              Date(2021, 1, 1));
  c.orders.push_back({"o9", "p1", std::nullopt, "Sprintec 28 tablet", "n0"});
  c.orders.push_back({"o10", "p1", Date(2020, 4, 1), "Sprintec 28 tablet", std::nullopt});
  auto f = filter_orders(c, lex());
  CHECK(f.report.input_orders == 5);
  CHECK(f.report.missing_start_date == 1);
  CHECK(f.report.missing_note == 1);
  CHECK(f.report.excluded == 1);
  CHECK(f.report.unmatched == 1);
  CHECK(f.report.retained_orders == 1);
}

TEST_CASE("detect_switches hand cases") {
  const ModalitySet oral{Modality::Oral};
  CHECK(detect_switches("p", {enc(1, oral), enc(2, oral)}).empty());

  auto one = detect_switches("p", {enc(1, oral), enc(2, {Modality::Intravaginal})});
  REQUIRE(one.size() == 1);
  CHECK(one[0].stopped == oral);
  CHECK(one[0].started == ModalitySet{Modality::Intravaginal});
  CHECK(one[0].note_id == "n2");

  auto add = detect_switches("p", {enc(1, oral), enc(2, {Modality::Oral, Modality::Transdermal}),
                                   enc(3, {Modality::Transdermal})});
  REQUIRE(add.size() == 1);
  CHECK(add[0].started == ModalitySet{Modality::Transdermal});
  CHECK(add[0].stopped.empty());

  CHECK_THROWS_AS(detect_switches("p", {enc(2, oral), enc(1, oral)}), std::logic_error);
  CHECK_THROWS_AS(detect_switches("p", {enc(2, oral), enc(2, oral)}), std::logic_error);
}

TEST_CASE("detect_switches equals the brute-force scan on random timelines") {
  Rng rng(2024);
  int total = 0;
  for (int p = 0; p < 200; ++p) {
    std::vector<TimelineEncounter> t;
    int day = 18000;
    const int n = 1 + static_cast<int>(rng.below(8));
    for (int i = 0; i < n; ++i) {
      day += 1 + static_cast<int>(rng.below(300));
      std::uint8_t bits = static_cast<std::uint8_t>(1U << rng.below(6));
      if (rng.bernoulli(0.3)) bits |= static_cast<std::uint8_t>(1U << rng.below(6));
      t.push_back(enc(day, ModalitySet::from_bits(bits)));
    }
    const std::string id = "p" + std::to_string(p);
    auto got = detect_switches(id, t);
    CHECK(got == testing::brute_force_switches(id, t));
    total += static_cast<int>(got.size());
    for (const auto& e : got) {
      CHECK(e.started.intersect(e.stopped).empty());
      CHECK_FALSE(e.started.empty());
      CHECK(e.prev_encounter_date < e.curr_encounter_date);
    }
  }
  CHECK(total > 100);
}

TEST_CASE("repeating an encounter's modality set never changes the events") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TimelineEncounter> t;
    int day = 100;
    for (int i = 0; i < 5; ++i) {
      day += 10;
      t.push_back(enc(day, ModalitySet::from_bits(static_cast<std::uint8_t>(1U << rng.below(6)))));
    }
    auto base = detect_switches("p", t);
    const std::size_t at = rng.below(t.size());
    auto longer = t;
    // Shift later dates so the copy slots in right after its original.
    for (std::size_t i = at + 1; i < longer.size(); ++i) longer[i].date = longer[i].date.plus_days(1);
    auto copy = t[at];
    copy.date = t[at].date.plus_days(1);
    copy.note_id = "dup";
    longer.insert(longer.begin() + static_cast<long>(at) + 1, copy);
    auto after = detect_switches("p", longer);
    REQUIRE(after.size() == base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      CHECK(after[i].started == base[i].started);
      CHECK(after[i].stopped == base[i].stopped);
      CHECK(after[i].note_id == base[i].note_id);
    }
  }
}

TEST_CASE("synthetic cohort matches the oracle and keeps matrix consistency") {
  corpus::GeneratorConfig cfg;
  cfg.n_patients = 2000;
  const auto c = corpus::generate_synthetic_corpus(cfg, 19);
  const auto cohort = filter_orders(c, lex());
  std::vector<SwitchEvent> oracle;
  for (const auto& [pid, t] : cohort.timelines) {
    auto e = testing::brute_force_switches(pid, t);
    oracle.insert(oracle.end(), e.begin(), e.end());
  }
  const auto events = detect_switches(cohort);
  CHECK(events == oracle);

  const auto summary = summarize_cohort(c, cohort, events);
  long cells = 0, expected = 0, both = 0;
  for (const auto& row : summary.pair_matrix) {
    for (int v : row) cells += v;
  }
  for (const auto& e : events) {
    expected += static_cast<long>(e.stopped.size() * e.started.size());
    both += !e.stopped.empty() && !e.started.empty();
  }
  CHECK(cells == expected);
  CHECK(cells >= both);
  CHECK(summary.total_events == static_cast<int>(events.size()));
}

TEST_CASE("filter is idempotent") {
  corpus::GeneratorConfig cfg;
  cfg.n_patients = 500;
  const auto c = corpus::generate_synthetic_corpus(cfg, 23);
  const auto once = filter_orders(c, lex());
  const auto twice = filter_orders(restrict_to(c, once.retained_orders), lex());
  CHECK(twice.timelines == once.timelines);
  CHECK(twice.retained_orders == once.retained_orders);
  CHECK(twice.report.retained_orders == once.report.retained_orders);
  CHECK(twice.report.duplicates == 0);
}

TEST_CASE("summary of a single oral to IUD event") {
  auto c = corpus_with_orders({{Date(2020, 1, 1), "Sprintec 28 tablet"},
                               {Date(2020, 6, 1), "Mirena 52 mg intrauterine system"}},
                              Date(2021, 1, 1));
  auto cohort = filter_orders(c, lex());
  auto events = detect_switches(cohort);
  REQUIRE(events.size() == 1);
  auto s = summarize_cohort(c, cohort, events);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      const bool hit = kPrescribedModalities[i] == Modality::Oral && kPrescribedModalities[j] == Modality::IUD;
      CHECK(s.pair_matrix[i][j] == (hit ? 1 : 0));
    }
  }
  CHECK(s.patients_with_switch == 1);

  auto empty = summarize_cohort(c, cohort, {});
  CHECK(empty.patients_with_switch == 0);
  CHECK(empty.total_events == 0);
  CHECK(empty.by_race[corpus::RaceEthnicity::White].with_switch == 0);
}

TEST_CASE("switch event json round trip") {
  SwitchEvent e{"p1", Date(2020, 1, 1), Date(2020, 5, 1), {Modality::Oral}, {Modality::IUD, Modality::Implant}, "n7"};
  CHECK(switch_event_from_json(to_json(e)) == e);
}

TEST_CASE("rendered tables have a header and one row per category") {
  corpus::GeneratorConfig cfg;
  cfg.n_patients = 400;
  const auto c = corpus::generate_synthetic_corpus(cfg, 3);
  const auto cohort = filter_orders(c, lex());
  const auto s = summarize_cohort(c, cohort, detect_switches(cohort));
  const auto table = render_demographics_table(s);
  CHECK(table.find("Black or African American") != std::string::npos);
  const auto matrix = render_pair_matrix(s);
  CHECK(std::count(matrix.begin(), matrix.end(), '\n') == 7);
}

}  // TEST_SUITE
