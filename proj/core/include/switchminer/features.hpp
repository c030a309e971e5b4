#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace switchminer::baselines {

enum class Scheme { Bow, Tfidf };

std::string_view to_string(Scheme s);
std::optional<Scheme> parse_scheme(std::string_view s);

/// Terms indexed alphabetically, 0..V-1.
struct Vocabulary {
  std::map<std::string, int> index;
  std::vector<std::string> terms;
  std::vector<int> df;
  std::vector<double> idf;  // ln((1 + N) / (1 + df)) + 1
  int n_docs = 0;

  [[nodiscard]] std::size_t size() const { return terms.size(); }
};

struct SparseRow {
  std::vector<std::pair<int, double>> entries;  // ascending column index
  bool operator==(const SparseRow&) const = default;
};

struct FeatureMatrix {
  Scheme scheme = Scheme::Bow;
  int n_features = 0;
  std::vector<std::string> row_ids;
  std::vector<SparseRow> rows;

  [[nodiscard]] std::size_t n_rows() const { return rows.size(); }
};

/// Keeps terms with df >= min_df. Throws InvalidInput for an empty result.
Vocabulary build_vocabulary(const std::vector<std::string>& docs, int min_df = 2);

/// Vectorizes documents against a frozen vocabulary; unknown terms are ignored.
/// bow: raw counts; tfidf: tf · idf, L2-normalized per row.
FeatureMatrix transform(const Vocabulary& vocabulary, const std::vector<std::string>& docs, Scheme scheme,
                        const std::vector<std::string>& row_ids = {});

std::pair<Vocabulary, FeatureMatrix> featurize(const std::vector<std::string>& docs, Scheme scheme,
                                               int min_df = 2, const std::vector<std::string>& row_ids = {});

}  // namespace switchminer::baselines
