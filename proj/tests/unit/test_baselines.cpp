#include <cmath>
#include <set>

#include "doctest.h"
#include "switchminer/error.hpp"
#include "switchminer/features.hpp"
#include "switchminer/forest.hpp"
#include "switchminer/generator.hpp"
#include "switchminer/learning_curve.hpp"
#include "switchminer/lexicon.hpp"
#include "switchminer/logreg.hpp"
#include "switchminer/switching.hpp"
#include "switchminer/tokenizer.hpp"
#include "test_support.hpp"

using namespace switchminer;
using namespace switchminer::baselines;

namespace {

double accuracy(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  int ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == gold[i];
  return static_cast<double>(ok) / static_cast<double>(pred.size());
}

double row_norm(const SparseRow& r) {
  double s = 0.0;
  for (const auto& [c, v] : r.entries) s += v * v;
  return std::sqrt(s);
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("tokenize examples") {
  CHECK(tokenize("Stopped the Pill\xE2\x80\x94spotting!") ==
        std::vector<std::string>{"stopped", "the", "pill", "spotting"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("IUD IUD iud") == std::vector<std::string>{"iud", "iud", "iud"});
  CHECK(tokenize("a b2 c") == std::vector<std::string>{"b2"});
  CHECK(token_count("one two three") == 3);
}

TEST_CASE("bag of words counts") {
  auto [vocab, x] = featurize({"aa bb", "aa cc"}, Scheme::Bow, 1);
  CHECK(vocab.terms == std::vector<std::string>{"aa", "bb", "cc"});
  REQUIRE(x.n_rows() == 2);
  CHECK(x.rows[0].entries == std::vector<std::pair<int, double>>{{0, 1.0}, {1, 1.0}});
  CHECK(x.rows[1].entries == std::vector<std::pair<int, double>>{{0, 1.0}, {2, 1.0}});
}

TEST_CASE("tf-idf hand vector") {
  // Single-character terms fall to the tokenizer, so the hand example uses two-letter terms.
  auto [vocab, x] = featurize({"aa bb", "aa cc"}, Scheme::Tfidf, 1);
  CHECK(vocab.idf[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(vocab.idf[1] - 1.4054651081081644) < 1e-4);
  CHECK(std::abs(vocab.idf[2] - 1.4054651081081644) < 1e-4);
  REQUIRE(x.rows[0].entries.size() == 2);
  CHECK(std::abs(x.rows[0].entries[0].second - 0.5797) < 1e-4);
  CHECK(std::abs(x.rows[0].entries[1].second - 0.8148) < 1e-4);
}

TEST_CASE("min_df prunes rare terms and an empty vocabulary is fatal") {
  auto vocab = build_vocabulary({"aa bb", "aa cc"}, 2);
  CHECK(vocab.terms == std::vector<std::string>{"aa"});
  CHECK_THROWS_AS(build_vocabulary({"aa", "bb"}, 2), InvalidInput);
}

TEST_CASE("frozen vocabulary ignores unseen terms and tf-idf rows are unit or zero") {
  auto vocab = build_vocabulary({"pill spotting", "pill cost", "ring cost"}, 1);
  auto x = transform(vocab, {"pill pill novel", "unknown words", "ring"}, Scheme::Tfidf);
  CHECK(std::abs(row_norm(x.rows[0]) - 1.0) < 1e-9);
  CHECK(x.rows[1].entries.empty());
  CHECK(std::abs(row_norm(x.rows[2]) - 1.0) < 1e-9);
}

TEST_CASE("logreg gradient matches central differences") {
  Rng rng(8);
  FeatureMatrix x;
  x.n_features = 4;
  for (int i = 0; i < 5; ++i) {
    SparseRow r;
    for (int j = 0; j < 4; ++j) r.entries.emplace_back(j, rng.normal());
    x.rows.push_back(r);
  }
  LogregObjective f(x, {0, 1, 2, 1, 0}, 3, 0.7);
  std::vector<double> p(f.n_params());
  for (auto& v : p) v = rng.normal(0.0, 0.5);
  std::vector<double> g;
  f(p, &g);
  const double h = 1e-6;
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto up = p, down = p;
    up[k] += h;
    down[k] -= h;
    const double numeric = (f(up, nullptr) - f(down, nullptr)) / (2 * h);
    const double rel = std::abs(numeric - g[k]) / std::max(1.0, std::abs(g[k]));
    CHECK(rel <= 1e-5);
  }
}

TEST_CASE("logreg separates blobs and converges monotonically") {
  auto [x, y] = testing::separable_blobs(100, 4);
  auto m = train_logreg(x, y, 10.0);
  CHECK(accuracy(m.predict(x), y) >= 0.99);
  CHECK(m.final_gradient_norm < 1e-6);
  for (std::size_t i = 1; i < m.objective_trace.size(); ++i) {
    CHECK(m.objective_trace[i] <= m.objective_trace[i - 1]);
  }
}

TEST_CASE("stronger regularization shrinks the weights") {
  auto [x, y] = testing::separable_blobs(100, 4);
  auto small = train_logreg(x, y, 0.01);
  auto large = train_logreg(x, y, 1000.0);
  CHECK(small.weight_norm() < large.weight_norm());
}

TEST_CASE("identical rows give even probabilities") {
  FeatureMatrix x;
  x.n_features = 2;
  std::vector<std::string> y;
  for (int i = 0; i < 10; ++i) {
    x.rows.push_back({{{0, 1.0}, {1, 2.0}}});
    y.push_back(i % 2 ? "b" : "a");
  }
  auto m = train_logreg(x, y, 1.0);
  auto p = m.predict_proba(x.rows[0]);
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(m.predict(x.rows[0]) == "a");
}

TEST_CASE("single-class training is fatal") {
  auto [x, y] = testing::separable_blobs(10, 1);
  std::vector<std::string> one(y.size(), "only");
  CHECK_THROWS_AS(train_logreg(x, one, 1.0), InvalidInput);
  CHECK_THROWS_AS(train_random_forest(x, one, {}), InvalidInput);
}

TEST_CASE("random forest solves xor") {
  auto [x, y] = testing::xor_fixture(50, 6);
  auto m = train_random_forest(x, y, {50, 20, 3});
  auto [xt, yt] = testing::xor_fixture(50, 60);
  CHECK(accuracy(m.predict(xt), yt) >= 0.95);
}

TEST_CASE("a single stump separates axis-aligned blobs") {
  auto [x, y] = testing::separable_blobs(100, 9);
  auto m = train_random_forest(x, y, {1, 1, 2});
  CHECK(m.trees.size() == 1);
  CHECK(accuracy(m.predict(x), y) >= 0.9);
}

TEST_CASE("forest leaves hold their sample counts and training is deterministic") {
  auto [x, y] = testing::xor_fixture(30, 2);
  auto a = train_random_forest(x, y, {10, 5, 11});
  auto b = train_random_forest(x, y, {10, 5, 11});
  auto [xt, yt] = testing::xor_fixture(20, 21);
  CHECK(a.predict(xt) == b.predict(xt));
  for (const auto& tree : a.trees) {
    for (const auto& node : tree.nodes) {
      if (node.feature >= 0) {
        int total = 0, kids = 0;
        for (int c : node.counts) total += c;
        for (int c : tree.nodes[node.left].counts) kids += c;
        for (int c : tree.nodes[node.right].counts) kids += c;
        CHECK(total == kids);
      }
    }
  }
}

TEST_CASE("patient splits are disjoint 70/10/20") {
  std::vector<std::string> ids;
  for (int i = 0; i < 100; ++i) ids.push_back("p" + std::to_string(i));
  for (int r = 0; r < 5; ++r) {
    auto s = split_patients(ids, 3, r);
    CHECK(s.train.size() == 70);
    CHECK(s.validation.size() == 10);
    CHECK(s.test.size() == 20);
    std::set<std::string> all(s.train.begin(), s.train.end());
    all.insert(s.validation.begin(), s.validation.end());
    all.insert(s.test.begin(), s.test.end());
    CHECK(all.size() == 100);
  }
  CHECK(split_patients(ids, 3, 0).test != split_patients(ids, 3, 1).test);
}

TEST_CASE("single-label scoring treats None as an empty set") {
  CHECK(score_single_label({Modality::Oral, Modality::None}, {"Oral", "None"}) == 1.0);
  CHECK(score_single_label({Modality::Oral, Modality::IUD}, {"Oral", "Implant"}) == 0.5);
}

TEST_CASE("learning curve on the deterministic-signal corpus") {
  // Large enough that every brand name clears min_df in training.
  corpus::GeneratorConfig cfg;
  cfg.n_patients = 10000;
  cfg.mention_stopped = false;
  const auto c = corpus::generate_synthetic_corpus(cfg, 13);
  const auto cohort = switching::filter_orders(c, switching::ModalityLexicon::builtin());
  const auto events = switching::detect_switches(cohort);
  const auto notes = labeled_notes(c, events);
  REQUIRE(notes.size() >= 50);

  LearningCurveOptions opt;
  opt.tasks = {Task::Started};
  opt.models = {ModelKind::Logreg};
  opt.schemes = {Scheme::Tfidf};
  opt.grid.C = {10.0};
  opt.fractions = {1.0, 0.25};
  opt.repeats = 2;
  opt.seed = 1;
  auto r = evaluate_learning_curve(notes, opt);
  REQUIRE(r.cells.size() == 2);
  const auto& full = r.cells[0];
  CHECK(full.fraction == 1.0);
  REQUIRE(full.mean_f1);
  CHECK(*full.mean_f1 >= 0.95);
  CHECK(r.selections.size() == 2);
  CHECK(r.splits.size() == 2);

  // The fraction 1.0 cell is a direct train/test run with the selected hyperparameters.
  std::map<std::string, const LabeledNote*> by_patient;
  std::vector<LabeledNote> train, test;
  std::set<std::string> tr(r.splits[0].train.begin(), r.splits[0].train.end());
  std::set<std::string> te(r.splits[0].test.begin(), r.splits[0].test.end());
  for (const auto& n : notes) {
    if (tr.contains(n.patient_id)) train.push_back(n);
    if (te.contains(n.patient_id)) test.push_back(n);
  }
  auto direct = fit_and_score(train, test, Task::Started, ModelKind::Logreg, Scheme::Tfidf, r.selections[0].chosen,
                              opt, 0);
  REQUIRE(direct);
  CHECK(*direct == doctest::Approx(full.scores[0]).epsilon(1e-12));

  const auto table = render_learning_curve_table(r.cells);
  CHECK(table.rfind("task\tmodel\tscheme\tfraction\tmean_f1\tsd_f1\tn_repeats\n", 0) == 0);
}

TEST_CASE("too few notes is fatal and single-class cells are unavailable") {
  std::vector<LabeledNote> few(10);
  CHECK_THROWS_AS(evaluate_learning_curve(few, {}), InvalidInput);

  std::vector<LabeledNote> same;
  for (int i = 0; i < 60; ++i) {
    same.push_back({"n" + std::to_string(i), "p" + std::to_string(i), "sprintec note text here",
                    Modality::Oral, Modality::IUD});
  }
  LearningCurveOptions opt;
  opt.tasks = {Task::Started};
  opt.models = {ModelKind::Logreg};
  opt.schemes = {Scheme::Bow};
  opt.grid.C = {1.0};
  opt.repeats = 1;
  auto r = evaluate_learning_curve(same, opt);
  for (const auto& cell : r.cells) CHECK_FALSE(cell.mean_f1);
  CHECK(render_learning_curve_table(r.cells).find("NA") != std::string::npos);
}

}  // TEST_SUITE
