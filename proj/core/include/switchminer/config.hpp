#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "switchminer/embedding.hpp"
#include "switchminer/generator.hpp"
#include "switchminer/jsonl.hpp"
#include "switchminer/learning_curve.hpp"
#include "switchminer/provider.hpp"
#include "switchminer/switching.hpp"

namespace switchminer::pipeline {

struct TopicsConfig {
  std::size_t pca_components = 5;
  int min_cluster_size = 5;
  int min_samples = 0;
  double tau = 1.0;
  std::size_t top_n = 10;
  topics::EmbeddingConfig embedding;
  std::optional<std::filesystem::path> grouping;  // raw → grouped topic map
};

struct PipelineConfig {
  /// Existing corpus directory; when unset the generator builds one.
  std::optional<std::filesystem::path> corpus_dir;
  corpus::GeneratorConfig generator;
  std::optional<std::filesystem::path> lexicon;     // unset → built-in lexicon
  std::optional<std::filesystem::path> prompt_dir;  // unset → built-in prompts
  switching::FilterOptions filter;
  extraction::ProviderConfig provider;
  double dev_fraction = 0.05;
  baselines::LearningCurveOptions baselines;
  TopicsConfig topics;
  std::string subgroup_attribute = "race_ethnicity";  // or "preferred_language"
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 7;

  /// Throws InvalidInput for out-of-range values or referenced paths that do not exist.
  void validate() const;
};

/// Relative paths are resolved against `base_dir`.
PipelineConfig pipeline_config_from_json(const Json& j, const std::filesystem::path& base_dir = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
Json to_json(const PipelineConfig& c);

}  // namespace switchminer::pipeline
