#include <benchmark/benchmark.h>

#include "switchminer/features.hpp"
#include "switchminer/generator.hpp"
#include "switchminer/hdbscan.hpp"
#include "switchminer/learning_curve.hpp"
#include "switchminer/lexicon.hpp"
#include "switchminer/logreg.hpp"
#include "switchminer/random.hpp"
#include "switchminer/stats.hpp"
#include "switchminer/switching.hpp"

using namespace switchminer;

namespace {

// Switch-note texts and started labels from a generated corpus.
const std::vector<baselines::LabeledNote>& notes() {
  static const auto n = [] {
    corpus::GeneratorConfig cfg;
    cfg.n_patients = 4000;
    const auto c = corpus::generate_synthetic_corpus(cfg, 3);
    const auto cohort = switching::filter_orders(c, switching::ModalityLexicon::builtin());
    return baselines::labeled_notes(c, switching::detect_switches(cohort));
  }();
  return n;
}

Matrix random_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const double centre = static_cast<double>(i % 5);
    for (std::size_t d = 0; d < dim; ++d) m(i, d) = rng.normal(centre, 0.3);
  }
  return m;
}

void BM_Hdbscan(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 5, 1);
  for (auto _ : state) benchmark::DoNotOptimize(topics::cluster_hdbscan(pts, {10, 0}));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Hdbscan)->Arg(250)->Arg(500)->Arg(1000)->Arg(2000)->Complexity();

void BM_Featurize(benchmark::State& state) {
  std::vector<std::string> docs;
  for (const auto& n : notes()) docs.push_back(n.text);
  const auto scheme = state.range(0) == 0 ? baselines::Scheme::Bow : baselines::Scheme::Tfidf;
  for (auto _ : state) benchmark::DoNotOptimize(baselines::featurize(docs, scheme, 2));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * docs.size()));
}
BENCHMARK(BM_Featurize)->Arg(0)->Arg(1);

void BM_LogregFit(benchmark::State& state) {
  std::vector<std::string> docs, labels;
  for (const auto& n : notes()) {
    docs.push_back(n.text);
    labels.emplace_back(to_string(n.started));
  }
  const auto [vocab, x] = baselines::featurize(docs, baselines::Scheme::Tfidf, 2);
  const double C = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(baselines::train_logreg(x, labels, C));
}
BENCHMARK(BM_LogregFit)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_ChiSquare(benchmark::State& state) {
  const std::vector<std::vector<double>> table = {{490, 6813}, {286, 1237}, {286, 2281},
                                                  {237, 3071}, {115, 1224}, {69, 466}};
  for (auto _ : state) benchmark::DoNotOptimize(stats::chi_square_test(table));
}
BENCHMARK(BM_ChiSquare);

}  // namespace
BENCHMARK_MAIN();
