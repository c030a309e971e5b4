#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "switchminer/jsonl.hpp"
#include "switchminer/matrix.hpp"
#include "switchminer/provider.hpp"

namespace switchminer::topics {

struct EmbeddingSet {
  std::vector<std::string> ids;  // aligned with rows
  Matrix vectors;
  std::string provider;
  bool normalized = false;
  std::vector<bool> empty_input;  // rows embedded from an empty text (zero vectors)

  [[nodiscard]] std::size_t dim() const { return vectors.cols; }
};

/// Signed feature hashing of token unigrams and bigrams, L2-normalized.
/// Empty or token-free texts give zero rows flagged in `empty_input`.
EmbeddingSet hashing_embed(const std::vector<std::string>& texts, std::size_t dim = 256,
                           const std::vector<std::string>& ids = {});

struct EmbeddingConfig {
  std::string provider = "hashing";  // "hashing" or "remote"
  std::size_t dim = 256;             // hashing only
  std::string endpoint;              // remote: base URL of an OpenAI-compatible server
  std::string model_name = "text-embedding-3-small";
  int batch_size = 64;
  int timeout_ms = 120000;
  extraction::RetryPolicy retry;
  /// Remote only: completed rows are kept here, so a failed run can resume.
  std::filesystem::path checkpoint;
};

EmbeddingConfig embedding_config_from_json(const Json& j);
Json to_json(const EmbeddingConfig& c);

/// Throws InvalidInput for an empty list and IoError when the remote provider
/// fails after retries (the checkpoint then holds all rows completed so far).
EmbeddingSet embed_texts(const std::vector<std::string>& texts, const EmbeddingConfig& config,
                         const std::vector<std::string>& ids = {});

double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace switchminer::topics
