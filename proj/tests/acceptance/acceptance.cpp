// One PASS/FAIL line per headline acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "switchminer/enrichment.hpp"
#include "switchminer/features.hpp"
#include "switchminer/forest.hpp"
#include "switchminer/generator.hpp"
#include "switchminer/hdbscan.hpp"
#include "switchminer/jsonl.hpp"
#include "switchminer/learning_curve.hpp"
#include "switchminer/lexicon.hpp"
#include "switchminer/logreg.hpp"
#include "switchminer/metrics.hpp"
#include "switchminer/pipeline.hpp"
#include "switchminer/random.hpp"
#include "switchminer/stats.hpp"
#include "switchminer/switching.hpp"
#include "test_support.hpp"

using namespace switchminer;

namespace {

// Collects failed checks with a short description of each.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++n_;
    if (!ok) failures_.push_back(what);
  }
  [[nodiscard]] bool ok() const { return failures_.empty(); }
  [[nodiscard]] std::string summary() const {
    if (ok()) return std::to_string(n_) + " checks";
    std::string s;
    for (const auto& f : failures_) s += (s.empty() ? "" : "; ") + f;
    return s;
  }
  std::vector<std::string> notes;

 private:
  int n_ = 0;
  std::vector<std::string> failures_;
};

std::string num(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Smallest k with P(X <= k) >= q for X ~ Binomial(n, p).
long binomial_quantile(long n, double p, double q) {
  double cdf = 0.0;
  for (long k = 0; k <= n; ++k) {
    const double log_pmf = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                           static_cast<double>(k) * std::log(p) + static_cast<double>(n - k) * std::log1p(-p);
    cdf += std::exp(log_pmf);
    if (cdf >= q) return k;
  }
  return n;
}

Json read_json(const std::filesystem::path& p) { return Json::parse(read_text_file(p)); }

// ---------------------------------------------------------------------------

void statistics_anchors(Checks& c) {
  const std::vector<std::vector<double>> race = {{490, 6813}, {286, 1237}, {286, 2281},
                                                 {237, 3071}, {115, 1224}, {69, 466}};
  const auto chi = stats::chi_square_test(race);
  c.expect(chi.p_value < 0.001, "race chi-square p=" + num(chi.p_value));
  const auto t = stats::t_test(stats::SampleSummary{25.9, 7.7, 1515}, stats::SampleSummary{29.1, 8.4, 15907});
  c.expect(t.p_value < 0.001, "age t-test p=" + num(t.p_value));
  const auto hand = stats::chi_square_test({{10, 20}, {20, 10}});
  c.expect(std::abs(hand.statistic - 6.6667) <= 1e-4, "hand chi-square=" + num(hand.statistic));
  c.expect(std::abs(hand.p_value - 0.00982) <= 1e-4, "hand chi-square p=" + num(hand.p_value));
}

void metric_exactness(Checks& c) {
  const std::vector<std::pair<ModalitySet, ModalitySet>> pairs = {
      {{Modality::Oral}, {Modality::Oral}}, {{Modality::IUD}, {Modality::Oral}}, {{Modality::Injection}, {}}};
  const double f1 = metrics::micro_f1(pairs).f1;
  c.expect(f1 == 0.4, "micro-F1 hand case=" + num(f1, 17));
  const double k1 = metrics::cohens_kappa({"A", "B", "A", "C"}, {"A", "B", "A", "C"});
  const double k2 = metrics::cohens_kappa({"A", "A", "B", "B"}, {"A", "B", "A", "B"});
  const double k3 = metrics::cohens_kappa({"A", "A", "A", "A"}, {"B", "B", "B", "B"});
  c.expect(k1 == 1.0 && k2 == 0.0 && k3 == 0.0, "kappa hand cases=" + num(k1) + "," + num(k2) + "," + num(k3));
  std::vector<metrics::AnnotationVerdict> v(93);
  for (int i = 0; i < 93; ++i) {
    v[i].note_id = "n" + std::to_string(i);
    v[i].reason_accurate = i < 85;
    v[i].hallucination = i < 2;
  }
  const auto s = metrics::annotation_summary(v);
  const double acc = std::round(*s.accuracy * 1000) / 10;
  const double hal = std::round(*s.hallucination_rate * 1000) / 10;
  c.expect(acc == 91.4 && hal == 2.2, "annotation summary=" + num(acc) + "%/" + num(hal) + "%");
}

pipeline::PipelineConfig mock_config(const std::filesystem::path& out, int n_patients, double eps, double h) {
  auto cfg = testing::small_pipeline_config(out, n_patients, 2024);
  cfg.provider.mock.swap_rate = eps;
  cfg.provider.mock.hallucination_rate = h;
  return cfg;
}

const auto kThroughExtract = pipeline::parse_stage_list("generate,detect,evaluate_prompts,extract");

void mock_end_to_end(Checks& c) {
  {
    testing::TempDir dir("accept-mock");
    pipeline::run_pipeline(mock_config(dir.path(), 1000, 0.0, 0.0), kThroughExtract);
    const auto gold = read_json(dir / "extract/scores.json").at("gold");
    c.expect(gold.at("started_f1") == 1.0, "noise-free started F1=" + gold.at("started_f1").dump());
    c.expect(gold.at("stopped_f1") == 1.0, "noise-free stopped F1=" + gold.at("stopped_f1").dump());
  }
  const double eps = 0.15, h = 0.022;
  testing::TempDir dir("accept-mock");
  pipeline::run_pipeline(mock_config(dir.path(), 14000, eps, h), kThroughExtract);
  const auto scores = read_json(dir / "extract/scores.json");
  const long n = scores.at("n").get<long>();
  c.expect(n >= 1000, "only " + std::to_string(n) + " test switch notes");
  const double started_err = scores.at("gold").at("started_error_rate").get<double>();
  const double stopped_err = scores.at("gold").at("stopped_error_rate").get<double>();
  c.expect(std::abs(started_err - eps) <= 0.03, "started error rate=" + num(started_err));
  c.expect(std::abs(stopped_err - eps) <= 0.03, "stopped error rate=" + num(stopped_err));
  const auto summary = read_json(dir / "extract/annotation_summary.json");
  const long flagged = std::lround(summary.at("hallucination_rate").get<double>() * static_cast<double>(n));
  const long lo = binomial_quantile(n, h, 0.025), hi = binomial_quantile(n, h, 0.975);
  c.expect(flagged >= lo && flagged <= hi,
           "hallucination flags " + std::to_string(flagged) + " outside [" + std::to_string(lo) + ", " +
               std::to_string(hi) + "]");
  c.notes.push_back("n=" + std::to_string(n) + " err=" + num(started_err, 3) + "/" + num(stopped_err, 3) +
                    " halluc=" + std::to_string(flagged) + " in [" + std::to_string(lo) + "," + std::to_string(hi) +
                    "]");
}

void detection_oracle(Checks& c) {
  corpus::GeneratorConfig cfg;
  cfg.n_patients = 200;
  const auto corpus = corpus::generate_synthetic_corpus(cfg, 99);
  const auto cohort = switching::filter_orders(corpus, switching::ModalityLexicon::builtin());
  std::vector<switching::SwitchEvent> oracle;
  for (const auto& [pid, timeline] : cohort.timelines) {
    auto e = testing::brute_force_switches(pid, timeline);
    oracle.insert(oracle.end(), e.begin(), e.end());
  }
  const auto events = switching::detect_switches(cohort);
  c.expect(events == oracle, "event sets differ (" + std::to_string(events.size()) + " vs " +
                                 std::to_string(oracle.size()) + ")");
  c.expect(!oracle.empty(), "no switches among 200 patients");
  c.notes.push_back(std::to_string(events.size()) + " events");
}

std::vector<std::vector<bool>> comembership(const std::vector<int>& labels) {
  std::vector<std::vector<bool>> m(labels.size(), std::vector<bool>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = 0; j < labels.size(); ++j) m[i][j] = labels[i] >= 0 && labels[i] == labels[j];
  }
  return m;
}

void clustering(Checks& c) {
  auto [pts, truth] = testing::gaussian_blobs({{0, 0}, {1, 0}, {0, 1}}, 30, 0.05, 1);
  const auto r = topics::cluster_hdbscan(pts, {5, 0});
  c.expect(r.n_clusters == 3, std::to_string(r.n_clusters) + " clusters");
  const double ari = topics::adjusted_rand_index(r.labels, truth);
  c.expect(ari == 1.0, "ARI=" + num(ari, 17));
  const auto base = comembership(r.labels);
  Rng rng(77);
  for (int s = 0; s < 20; ++s) {
    std::vector<std::size_t> perm(pts.rows);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    Matrix shuffled(pts.rows, pts.cols);
    for (std::size_t i = 0; i < pts.rows; ++i) {
      for (std::size_t d = 0; d < pts.cols; ++d) shuffled(i, d) = pts(perm[i], d);
    }
    const auto labels = topics::cluster_hdbscan(shuffled, {5, 0}).labels;
    std::vector<int> back(pts.rows);
    for (std::size_t i = 0; i < pts.rows; ++i) back[perm[i]] = labels[i];
    c.expect(comembership(back) == base, "shuffle " + std::to_string(s) + " changed the partition");
  }
  Matrix four(4, 2);
  four(1, 0) = 10;
  four(2, 1) = 10;
  four(3, 0) = four(3, 1) = 10;
  const auto small = topics::cluster_hdbscan(four, {5, 0});
  c.expect(small.labels == std::vector<int>(4, -1), "under-sized input was clustered");
}

void enrichment(Checks& c) {
  const auto hand = topics::enrichment_scores({{0.9}, {0.8}, {0.1}, {0.2}}, {{1, 0}, {1, 0}, {0, 1}, {0, 1}}, {1},
                                              {"A", "B"});
  const auto& a = hand.cells[0][0];
  c.expect(std::abs(*a.theta - 0.425) <= 1e-9, "theta=" + num(*a.theta, 17));
  c.expect(std::abs(*a.lift - 1.7) <= 1e-9, "lift=" + num(*a.lift, 17));
  c.expect(std::abs(*a.score - 0.765534746362977) <= 1e-9, "log2 lift=" + num(*a.score, 17));

  // Weighted lift mean over subgroups is 1 for every topic.
  {
    Rng rng(31);
    const std::size_t n = 500, K = 5, J = 4;
    std::vector<std::vector<double>> q(n, std::vector<double>(K)), y(n, std::vector<double>(J, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (auto& v : q[i]) s += (v = rng.uniform());
      for (auto& v : q[i]) v /= s;
      y[i][rng.below(J)] = 1.0;
    }
    const auto m = topics::enrichment_scores(q, y, {1, 2, 3, 4, 5}, {"A", "B", "C", "D"});
    for (std::size_t k = 0; k < K; ++k) {
      double weighted = 0.0;
      for (std::size_t j = 0; j < J; ++j) weighted += *m.cells[k][j].lift * m.subgroup_size[j];
      weighted /= static_cast<double>(n);
      c.expect(std::abs(weighted - 1.0) <= 1e-9, "weighted lift mean of topic " + std::to_string(k) + "=" +
                                                     num(weighted, 17));
    }
  }

  // Planted enrichment: topic 1 drawn with weight 3 (others 1) in one subgroup,
  // subgroups sampled from the generator's race mixture without the Missing
  // category, topics hard-assigned.
  const corpus::GeneratorConfig gen;
  std::vector<double> group_weights(gen.race_weights.begin(), gen.race_weights.end() - 1);
  const std::size_t J = group_weights.size(), K = 10, planted_group = 1, planted_topic = 0;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < J; ++j) names.emplace_back(corpus::to_string(corpus::kRaceEthnicities[j]));
  std::vector<int> topic_ids(K);
  std::iota(topic_ids.begin(), topic_ids.end(), 1);
  const std::size_t n = 500000;
  std::vector<std::vector<std::vector<double>>> scores(K, std::vector<std::vector<double>>(J));
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> q(n, std::vector<double>(K, 0.0)), y(n, std::vector<double>(J, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t g = rng.weighted(group_weights);
      y[i][g] = 1.0;
      std::vector<double> tw(K, 1.0);
      if (g == planted_group) tw[planted_topic] = 3.0;
      q[i][rng.weighted(tw)] = 1.0;
    }
    const auto m = topics::enrichment_scores(q, y, topic_ids, names);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t j = 0; j < J; ++j) scores[k][j].push_back(*m.cells[k][j].score);
    }
  }
  double worst_other = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < J; ++j) {
      const double med = median(scores[k][j]);
      if (k == planted_topic && j == planted_group) {
        c.expect(med > 1.0, "planted cell log2 lift=" + num(med));
        c.notes.push_back("planted=" + num(med, 3));
      } else {
        worst_other = std::max(worst_other, std::abs(med));
        c.expect(std::abs(med) <= 0.3, "cell " + std::to_string(k + 1) + "/" + names[j] + " log2 lift=" + num(med));
      }
    }
  }
  c.notes.push_back("max other |log2|=" + num(worst_other, 3));
}

double accuracy(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  int ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == gold[i];
  return static_cast<double>(ok) / static_cast<double>(pred.size());
}

void baselines_criterion(Checks& c) {
  using namespace baselines;
  auto [vocab, x] = featurize({"aa bb", "aa cc"}, Scheme::Tfidf, 1);
  c.expect(x.rows[0].entries.size() == 2 && std::abs(x.rows[0].entries[0].second - 0.5797) <= 1e-4 &&
               std::abs(x.rows[0].entries[1].second - 0.8148) <= 1e-4,
           "tf-idf hand vector");

  {
    Rng rng(8);
    FeatureMatrix fx;
    fx.n_features = 4;
    for (int i = 0; i < 5; ++i) {
      SparseRow r;
      for (int j = 0; j < 4; ++j) r.entries.emplace_back(j, rng.normal());
      fx.rows.push_back(r);
    }
    const LogregObjective f(fx, {0, 1, 2, 1, 0}, 3, 0.7);
    std::vector<double> p(f.n_params());
    for (auto& v : p) v = rng.normal(0.0, 0.5);
    std::vector<double> g;
    f(p, &g);
    double worst = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      auto up = p, down = p;
      up[k] += 1e-6;
      down[k] -= 1e-6;
      const double numeric = (f(up, nullptr) - f(down, nullptr)) / 2e-6;
      worst = std::max(worst, std::abs(numeric - g[k]) / std::max(1.0, std::abs(g[k])));
    }
    c.expect(worst <= 1e-5, "gradient check relative error=" + num(worst));
  }

  {
    auto [bx, by] = testing::separable_blobs(100, 4);
    const auto m = train_logreg(bx, by, 10.0);
    const double acc = accuracy(m.predict(bx), by);
    c.expect(acc >= 0.99, "blob train accuracy=" + num(acc));
    c.expect(m.final_gradient_norm < 1e-6, "blob gradient norm=" + num(m.final_gradient_norm));
  }

  {
    auto [tx, ty] = testing::xor_fixture(50, 6);
    const auto forest = train_random_forest(tx, ty, {50, 20, 3});
    auto [vx, vy] = testing::xor_fixture(50, 60);
    const double acc = accuracy(forest.predict(vx), vy);
    c.expect(acc >= 0.95, "xor accuracy=" + num(acc));
  }

  // Learning curve on the corpus whose notes name only the started drug,
  // median of the per-seed cell means over five corpus seeds.
  LearningCurveOptions opt;
  opt.tasks = {Task::Started};
  opt.grid.C = {1.0, 10.0};
  opt.grid.n_estimators = {50};
  opt.grid.max_depth = {20};
  opt.fractions = {1.0, 0.5, 0.25, 0.1, 0.05};
  opt.repeats = 5;
  opt.seed = 5;
  std::map<std::string, std::map<double, std::vector<double>>> per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    corpus::GeneratorConfig cfg;
    cfg.n_patients = 10000;
    cfg.mention_stopped = false;
    const auto corpus = corpus::generate_synthetic_corpus(cfg, seed);
    const auto cohort = switching::filter_orders(corpus, switching::ModalityLexicon::builtin());
    const auto notes = labeled_notes(corpus, switching::detect_switches(cohort));
    const auto result = evaluate_learning_curve(notes, opt);
    for (const auto& cell : result.cells) {
      if (!cell.mean_f1) continue;
      const std::string name = std::string(to_string(cell.model)) + "/" + std::string(to_string(cell.scheme));
      per_seed[name][cell.fraction].push_back(*cell.mean_f1);
    }
  }
  for (auto model : opt.models) {
    for (auto scheme : opt.schemes) {
      const std::string name = std::string(to_string(model)) + "/" + std::string(to_string(scheme));
      std::vector<std::pair<double, double>> curve;
      bool complete = true;
      for (const auto& [f, scores] : per_seed[name]) {
        complete = complete && scores.size() == 5;
        curve.emplace_back(f, median(scores));
      }
      std::string trace;
      for (const auto& [f, m] : curve) trace += (trace.empty() ? "" : " ") + num(f, 2) + ":" + num(m, 4);
      c.expect(complete && curve.size() == opt.fractions.size(), name + " has unavailable cells");
      for (std::size_t i = 1; i < curve.size(); ++i) {
        c.expect(curve[i].second >= curve[i - 1].second, name + " median decreases: " + trace);
      }
      c.notes.push_back(name + " " + trace);
    }
  }
}

void determinism(Checks& c) {
  testing::TempDir a("accept-det"), b("accept-det");
  const auto all = pipeline::parse_stage_list("all");
  auto ca = mock_config(a.path(), 1500, 0.15, 0.022);
  auto cb = mock_config(b.path(), 1500, 0.15, 0.022);
  const auto ra = pipeline::run_pipeline(ca, all);
  const auto rb = pipeline::run_pipeline(cb, all);
  const auto da = pipeline::manifest_digest(ra.manifest), db = pipeline::manifest_digest(rb.manifest);
  c.expect(da == db, "manifest digests differ: " + da + " vs " + db);
  c.notes.push_back("digest " + da.substr(0, 12));
}

struct Criterion {
  const char* name;
  double time_limit_s;  // 0 means none
  std::function<void(Checks&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"statistics-anchors", 1.0, statistics_anchors},
      {"metric-exactness", 0.0, metric_exactness},
      {"mock-end-to-end", 120.0, mock_end_to_end},
      {"switch-detection-oracle", 0.0, detection_oracle},
      {"clustering", 0.0, clustering},
      {"enrichment", 0.0, enrichment},
      {"baselines", 300.0, baselines_criterion},
      {"determinism", 0.0, determinism},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Checks checks;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(checks);
    } catch (const std::exception& e) {
      checks.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.time_limit_s > 0.0) {
      checks.expect(secs < cr.time_limit_s, "runtime " + num(secs, 3) + " s over the " + num(cr.time_limit_s) + " s limit");
    }
    std::string notes;
    for (const auto& n : checks.notes) notes += " | " + n;
    std::printf("%s %s (%s; %.2f s)%s\n", checks.ok() ? "PASS" : "FAIL", cr.name, checks.summary().c_str(), secs,
                notes.c_str());
    std::fflush(stdout);
    failed += !checks.ok();
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
