#include "switchminer/features.hpp"

#include <cmath>
#include <set>

#include "switchminer/error.hpp"
#include "switchminer/tokenizer.hpp"

namespace switchminer::baselines {

std::string_view to_string(Scheme s) { return s == Scheme::Bow ? "bow" : "tfidf"; }

std::optional<Scheme> parse_scheme(std::string_view s) {
  if (s == "bow") return Scheme::Bow;
  if (s == "tfidf") return Scheme::Tfidf;
  return std::nullopt;
}

Vocabulary build_vocabulary(const std::vector<std::string>& docs, int min_df) {
  std::map<std::string, int> df;
  for (const auto& d : docs) {
    const auto terms = tokenize(d);
    for (const auto& t : std::set<std::string>(terms.begin(), terms.end())) ++df[t];
  }
  Vocabulary v;
  v.n_docs = static_cast<int>(docs.size());
  for (const auto& [term, count] : df) {
    if (count < min_df) continue;
    v.index.emplace(term, static_cast<int>(v.terms.size()));
    v.terms.push_back(term);
    v.df.push_back(count);
    v.idf.push_back(std::log((1.0 + v.n_docs) / (1.0 + count)) + 1.0);
  }
  if (v.terms.empty()) {
    throw InvalidInput("empty vocabulary: no term occurs in at least min_df=" + std::to_string(min_df) +
                       " documents; lower min_df");
  }
  return v;
}

FeatureMatrix transform(const Vocabulary& vocabulary, const std::vector<std::string>& docs, Scheme scheme,
                        const std::vector<std::string>& row_ids) {
  FeatureMatrix m;
  m.scheme = scheme;
  m.n_features = static_cast<int>(vocabulary.size());
  m.row_ids = row_ids;
  m.rows.reserve(docs.size());
  for (const auto& d : docs) {
    std::map<int, double> counts;
    for (const auto& t : tokenize(d)) {
      if (auto it = vocabulary.index.find(t); it != vocabulary.index.end()) counts[it->second] += 1.0;
    }
    SparseRow row;
    row.entries.assign(counts.begin(), counts.end());
    if (scheme == Scheme::Tfidf) {
      double norm = 0.0;
      for (auto& [j, w] : row.entries) {
        w *= vocabulary.idf[static_cast<std::size_t>(j)];
        norm += w * w;
      }
      norm = std::sqrt(norm);
      if (norm > 0.0) {
        for (auto& e : row.entries) e.second /= norm;
      }
    }
    m.rows.push_back(std::move(row));
  }
  return m;
}

std::pair<Vocabulary, FeatureMatrix> featurize(const std::vector<std::string>& docs, Scheme scheme, int min_df,
                                               const std::vector<std::string>& row_ids) {
  if (docs.empty()) throw InvalidInput("featurize: no documents");
  Vocabulary v = build_vocabulary(docs, min_df);
  FeatureMatrix m = transform(v, docs, scheme, row_ids);
  return {std::move(v), std::move(m)};
}

}  // namespace switchminer::baselines
