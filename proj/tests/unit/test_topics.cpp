#include <cmath>
#include <numeric>

#include "doctest.h"
#include "switchminer/embedding.hpp"
#include "switchminer/enrichment.hpp"
#include "switchminer/error.hpp"
#include "switchminer/hdbscan.hpp"
#include "switchminer/pca.hpp"
#include "switchminer/topic_model.hpp"
#include "test_support.hpp"

using namespace switchminer;
using namespace switchminer::topics;

namespace {

/// Pairwise co-membership, the label-free view of a partition (noise never co-clusters).
std::vector<std::vector<bool>> comembership(const std::vector<int>& labels) {
  std::vector<std::vector<bool>> m(labels.size(), std::vector<bool>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = 0; j < labels.size(); ++j) m[i][j] = labels[i] >= 0 && labels[i] == labels[j];
  }
  return m;
}

Matrix rows_to_matrix(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

}  // namespace

TEST_SUITE("topics") {

TEST_CASE("hashing embedder examples") {
  auto e = hashing_embed({"insurance denied", "insurance denied", "weight gain", ""});
  CHECK(e.dim() == 256);
  CHECK(e.normalized);
  CHECK(cosine_similarity(e.vectors.row(0), e.vectors.row(1)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_similarity(e.vectors.row(0), e.vectors.row(2)) < 0.5);
  CHECK(e.empty_input == std::vector<bool>{false, false, false, true});
  for (double v : e.vectors.row(3)) CHECK(v == 0.0);
  double norm = 0.0;
  for (double v : e.vectors.row(2)) norm += v * v;
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("embed_texts rejects an empty list") {
  CHECK_THROWS_AS(embed_texts({}, EmbeddingConfig{}), InvalidInput);
  auto e = embed_texts({"a reason"}, EmbeddingConfig{}, {"n1"});
  CHECK(e.ids == std::vector<std::string>{"n1"});
  CHECK(e.provider == "hashing-256");
}

TEST_CASE("pca on data inside a low-dimensional subspace reconstructs exactly") {
  Rng rng(4);
  Matrix x(60, 8);
  for (std::size_t r = 0; r < 60; ++r) {
    const double a = rng.normal(), b = rng.normal();
    for (std::size_t c = 0; c < 8; ++c) x(r, c) = a * static_cast<double>(c) + b * (c % 2 ? 1.0 : -1.0) + 3.0;
  }
  auto fit = reduce_pca(x, 2);
  CHECK(fit.rank == 2);
  double err = 0.0;
  for (std::size_t r = 0; r < 60; ++r) {
    for (std::size_t c = 0; c < 8; ++c) {
      double rec = fit.mean[c];
      for (std::size_t k = 0; k < 2; ++k) rec += fit.projected(r, k) * fit.components(k, c);
      err = std::max(err, std::abs(rec - x(r, c)));
    }
  }
  CHECK(err < 1e-8);
  for (std::size_t k = 0; k < 2; ++k) {
    double big = 0.0;
    for (std::size_t c = 0; c < 8; ++c) {
      if (std::abs(fit.components(k, c)) > std::abs(big)) big = fit.components(k, c);
    }
    CHECK(big > 0.0);
  }
  auto more = reduce_pca(x, 4);
  CHECK_FALSE(more.warnings.empty());
}

TEST_CASE("pca captured variance on isotropic data") {
  Rng rng(12);
  const std::size_t D = 40;
  // Enough rows that the sample spectrum's upper edge sits close to 1.
  Matrix x(20000, D);
  for (double& v : x.data) v = rng.normal();
  auto fit = reduce_pca(x, 5);
  const double expected = 5.0 / static_cast<double>(D);
  const double fraction = fit.captured_variance() / fit.total_variance;
  CHECK(std::abs(fraction - expected) <= 0.2 * expected);
}

TEST_CASE("pca of a repeated point and projection idempotence") {
  Matrix same(10, 4, 2.5);
  auto fit = reduce_pca(same, 2);
  for (double v : fit.projected.data) CHECK(v == 0.0);

  auto [pts, labels] = testing::gaussian_blobs({{0, 0, 0, 0, 0, 0}, {3, 1, 0, 2, 0, 1}}, 30, 0.3, 5);
  auto f1 = reduce_pca(pts, 3);
  auto f2 = reduce_pca(f1.projected, 3);
  double diff = 0.0;
  for (std::size_t i = 0; i < f1.projected.data.size(); ++i) {
    diff = std::max(diff, std::abs(std::abs(f2.projected.data[i]) - std::abs(f1.projected.data[i])));
  }
  CHECK(diff < 1e-9);
  CHECK(reduce_pca(pts, 3).projected == f1.projected);
}

TEST_CASE("three blobs give three clusters with perfect agreement") {
  auto [pts, truth] = testing::gaussian_blobs({{0, 0}, {1, 0}, {0, 1}}, 30, 0.05, 1);
  auto r = cluster_hdbscan(pts, {5, 0});
  CHECK(r.n_clusters == 3);
  CHECK(adjusted_rand_index(r.labels, truth) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("partitions are invariant to input order") {
  auto [pts, truth] = testing::gaussian_blobs({{0, 0}, {1, 0}, {0, 1}}, 30, 0.05, 1);
  const auto base = comembership(cluster_hdbscan(pts, {5, 0}).labels);
  Rng rng(77);
  for (int s = 0; s < 20; ++s) {
    std::vector<std::size_t> perm(pts.rows);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    Matrix shuffled(pts.rows, pts.cols);
    for (std::size_t i = 0; i < pts.rows; ++i) {
      for (std::size_t c = 0; c < pts.cols; ++c) shuffled(i, c) = pts(perm[i], c);
    }
    const auto labels = cluster_hdbscan(shuffled, {5, 0}).labels;
    std::vector<int> back(pts.rows);
    for (std::size_t i = 0; i < pts.rows; ++i) back[perm[i]] = labels[i];
    CHECK(comembership(back) == base);
  }
}

TEST_CASE("undersized input is all noise") {
  Matrix four = rows_to_matrix({{0, 0}, {10, 0}, {0, 10}, {10, 10}});
  auto r = cluster_hdbscan(four, {5, 0});
  CHECK(r.n_clusters == 0);
  CHECK(r.labels == std::vector<int>(4, -1));
}

TEST_CASE("far outliers are labeled noise") {
  auto [pts, truth] = testing::gaussian_blobs({{0, 0}, {3, 0}}, 30, 0.1, 3);
  Matrix all(pts.rows + 5, 2);
  std::copy(pts.data.begin(), pts.data.end(), all.data.begin());
  const double far[5][2] = {{40, 40}, {-40, 35}, {35, -45}, {-50, -50}, {60, 0}};
  for (int i = 0; i < 5; ++i) {
    all(pts.rows + i, 0) = far[i][0];
    all(pts.rows + i, 1) = far[i][1];
  }
  auto r = cluster_hdbscan(all, {5, 0});
  CHECK(r.n_clusters == 2);
  int noise = 0;
  for (int i = 0; i < 5; ++i) noise += r.labels[pts.rows + i] == -1;
  CHECK(noise >= 3);
}

TEST_CASE("adjusted rand index basics") {
  CHECK(adjusted_rand_index({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  CHECK(adjusted_rand_index({0, 0, 1, 1}, {0, 1, 0, 1}) < 0.01);
}

TEST_CASE("soft weights") {
  Matrix p = rows_to_matrix({{0, 0}, {5, 0}, {2.5, 0}, {9, 9}});
  std::vector<std::vector<double>> c = {{0, 0}, {10, 0}};
  auto q = soft_weights(p, {0, 1, 0, -1}, c, 1.0);
  CHECK(q[0][0] > 0.99);
  CHECK(q[1][0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(q[1][1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(q[2][0] > q[2][1]);
  CHECK(q[3] == std::vector<double>{0.0, 0.0});
  for (int i = 0; i < 3; ++i) CHECK(q[i][0] + q[i][1] == doctest::Approx(1.0).epsilon(1e-12));
  auto single = soft_weights(p, {0, 0, 0, 0}, {{1, 1}}, 1.0);
  for (const auto& row : single) CHECK(row[0] == 1.0);
}

TEST_CASE("c-tf-idf keywords") {
  auto kw = ctfidf_terms({"spotting spotting bleeding", "insurance insurance cost"}, {0, 1}, 3);
  REQUIRE(kw.size() == 2);
  CHECK(kw.at(0).front().term == "spotting");
  CHECK(kw.at(1).front().term == "insurance");
  for (const auto& k : kw.at(1)) CHECK(k.term != "spotting");

  auto same = ctfidf_terms({"pill cost", "pill cost", "pill cost"}, {0, 1, 2}, 5);
  CHECK(same.at(0) == same.at(1));
  CHECK(same.at(1) == same.at(2));
  auto noisy = ctfidf_terms({"pill cost", "ignored words"}, {0, -1}, 5);
  CHECK(noisy.size() == 1);
}

TEST_CASE("reserved reasons") {
  CHECK(is_reserved_reason(""));
  CHECK(is_reserved_reason("None"));
  CHECK(is_reserved_reason("No relevant reason."));
  CHECK_FALSE(is_reserved_reason("cost"));
}

TEST_CASE("topic model assembly, grouping and keywords") {
  auto [pts, truth] = testing::gaussian_blobs({{0, 0}, {4, 0}, {0, 4}}, 10, 0.1, 2);
  std::vector<std::string> ids, docs;
  std::vector<int> labels;
  const char* words[] = {"spotting bleeding", "insurance cost", "weight mood"};
  for (std::size_t i = 0; i < pts.rows; ++i) {
    ids.push_back("n" + std::to_string(i));
    docs.push_back(words[truth[i]]);
    labels.push_back(truth[i] + 1);
  }
  ids.push_back("r");
  docs.push_back("none");
  labels.push_back(kReservedTopic);
  Matrix points(pts.rows + 1, 2);
  std::copy(pts.data.begin(), pts.data.end(), points.data.begin());
  auto model = assemble_topic_model(ids, docs, labels, points, 1.0, 5);
  CHECK(model.n_topics == 3);
  for (std::size_t i = 0; i < pts.rows; ++i) {
    double s = 0.0;
    for (double w : model.weights[i]) s += w;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(model.weights[i][0] == 0.0);
  }
  CHECK(model.weights.back()[0] == 1.0);

  auto same = group_topics(model, identity_grouping(model), 5);
  CHECK(same.labels == model.labels);
  CHECK(same.weights == model.weights);
  CHECK(same.keywords == model.keywords);

  GroupingMap merge = {{1, {1, "bleeding"}}, {2, {2, "cost and mood"}}, {3, {2, "cost and mood"}}};
  auto merged = group_topics(model, merge, 5);
  CHECK(merged.n_topics == 2);
  CHECK(merged.topic_names.at(2) == "cost and mood");
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    CHECK(merged.weights[i][2] == doctest::Approx(model.weights[i][2] + model.weights[i][3]).epsilon(1e-12));
  }

  GroupingMap missing = {{1, {1, "a"}}, {2, {2, "b"}}};
  try {
    group_topics(model, missing, 5);
    FAIL("expected InvalidInput");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
  GroupingMap gap = {{1, {1, "a"}}, {2, {3, "b"}}, {3, {3, "b"}}};
  CHECK_THROWS_AS(group_topics(model, gap, 5), InvalidInput);

  CHECK(render_keyword_table(model).rfind("topic\tname\trank\tterm\tscore\n", 0) == 0);
}

TEST_CASE("shipped demo grouping parses to nine topics") {
  auto g = load_grouping(testing::data_dir() / "grouping_demo.tsv");
  std::set<int> grouped;
  for (const auto& [raw, e] : g) grouped.insert(e.grouped);
  CHECK(grouped.size() == 9);
  CHECK(*grouped.rbegin() == 9);
  CHECK(parse_grouping("# c\n1\t1\tone\n2\t1\tone\n").size() == 2);
}

TEST_CASE("enrichment hand example") {
  std::vector<std::vector<double>> q = {{0.9}, {0.8}, {0.1}, {0.2}};
  std::vector<std::vector<double>> y = {{1, 0}, {1, 0}, {0, 1}, {0, 1}};
  auto m = enrichment_scores(q, y, {1}, {"A", "B"});
  const auto& a = m.cells[0][0];
  REQUIRE(a.theta);
  CHECK(std::abs(*a.theta - 0.425) <= 1e-12);
  CHECK(std::abs(*a.lift - 1.7) <= 1e-12);
  CHECK(std::abs(*a.score - 0.765534746362977) <= 1e-9);
  CHECK(m.n_notes == 4);
}

TEST_CASE("enrichment degenerate and uniform cases") {
  auto one = enrichment_scores({{1.0}}, {{1.0}}, {1}, {"A"});
  CHECK(*one.cells[0][0].theta == 1.0);
  CHECK(*one.cells[0][0].lift == 1.0);
  CHECK(*one.cells[0][0].score == 0.0);

  auto flat = enrichment_scores({{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}}, {{1, 0}, {1, 0}, {0, 1}, {0, 1}},
                                {1, 2}, {"A", "B"});
  for (const auto& row : flat.cells) {
    for (const auto& c : row) CHECK(*c.score == doctest::Approx(0.0).epsilon(1e-12));
  }

  auto gaps = enrichment_scores({{0.0, 1.0}, {0.0, 1.0}}, {{1, 0}, {1, 0}}, {1, 2}, {"A", "B"});
  CHECK_FALSE(gaps.cells[0][0].theta);
  CHECK_FALSE(gaps.cells[1][1].theta);
  CHECK(render_enrichment_table(gaps).find("NA") != std::string::npos);
}

TEST_CASE("enrichment weight conservation and lift mean") {
  Rng rng(31);
  const std::size_t n = 300, K = 4, J = 3;
  std::vector<std::vector<double>> q(n, std::vector<double>(K)), y(n, std::vector<double>(J, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (auto& v : q[i]) s += (v = rng.uniform());
    for (auto& v : q[i]) v /= s;
    y[i][rng.below(J)] = 1.0;
  }
  auto m = enrichment_scores(q, y, {1, 2, 3, 4}, {"A", "B", "C"});
  for (std::size_t k = 0; k < K; ++k) {
    double conserved = 0.0, weighted = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      conserved += *m.cells[k][j].theta * m.topic_weight[k] * m.subgroup_size[j];
      weighted += *m.cells[k][j].lift * m.subgroup_size[j];
    }
    CHECK(std::abs(conserved - m.topic_weight[k]) <= 1e-9);
    CHECK(std::abs(weighted / static_cast<double>(n) - 1.0) <= 1e-9);
  }
}

TEST_CASE("enrichment for a model drops noise, reserved and unlisted notes") {
  TopicModel model;
  model.note_ids = {"a", "b", "c", "d", "e"};
  model.labels = {1, 1, -1, 0, 1};
  model.n_topics = 1;
  model.weights = {{0, 1}, {0, 1}, {0, 0}, {1, 0}, {0, 1}};
  auto m = enrichment_for_model(model, {"X", "Y", "X", "X", "Z"}, {"X", "Y"});
  CHECK(m.n_notes == 2);
  CHECK(m.subgroups == std::vector<std::string>{"X", "Y"});
  CHECK(*m.cells[0][0].lift == doctest::Approx(1.0));
}

}  // TEST_SUITE
