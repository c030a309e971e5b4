#include "switchminer/config.hpp"

#include "switchminer/error.hpp"

namespace switchminer::pipeline {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

template <typename T>
std::vector<T> parse_enum_list(const Json& j, const char* what, std::optional<T> (*parse)(std::string_view)) {
  std::vector<T> out;
  for (const auto& item : j) {
    auto v = parse(item.get<std::string>());
    if (!v) throw InvalidInput(std::string("unknown ") + what + " '" + item.get<std::string>() + "'");
    out.push_back(*v);
  }
  return out;
}

std::optional<baselines::Task> parse_task(std::string_view s) {
  if (s == "started") return baselines::Task::Started;
  if (s == "stopped") return baselines::Task::Stopped;
  return std::nullopt;
}

}  // namespace

void PipelineConfig::validate() const {
  if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) throw InvalidInput("dev_fraction must lie in (0, 1)");
  if (subgroup_attribute != "race_ethnicity" && subgroup_attribute != "preferred_language") {
    throw InvalidInput("subgroup_attribute must be race_ethnicity or preferred_language");
  }
  auto must_exist = [](const std::optional<std::filesystem::path>& p, const char* what) {
    if (p && !std::filesystem::exists(*p)) throw InvalidInput(std::string(what) + " not found: " + p->string());
  };
  must_exist(corpus_dir, "corpus_dir");
  must_exist(lexicon, "lexicon");
  must_exist(prompt_dir, "prompt_dir");
  must_exist(topics.grouping, "topics.grouping");
  if (!corpus_dir) generator.validate();
  provider.validate();
  if (topics.pca_components < 1) throw InvalidInput("topics.pca_components must be >= 1");
  if (topics.min_cluster_size < 2) throw InvalidInput("topics.min_cluster_size must be >= 2");
  if (!(topics.tau > 0.0)) throw InvalidInput("topics.tau must be positive");
  if (baselines.repeats < 1) throw InvalidInput("baselines.repeats must be >= 1");
}

PipelineConfig pipeline_config_from_json(const Json& j, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  if (j.contains("corpus_dir")) c.corpus_dir = resolve(base_dir, j.at("corpus_dir").get<std::string>());
  if (j.contains("generator")) c.generator = corpus::generator_config_from_json(j.at("generator"));
  if (j.contains("lexicon")) c.lexicon = resolve(base_dir, j.at("lexicon").get<std::string>());
  if (j.contains("prompt_dir")) c.prompt_dir = resolve(base_dir, j.at("prompt_dir").get<std::string>());
  if (auto f = j.find("filter"); f != j.end()) {
    c.filter.min_tokens = f->value("min_tokens", c.filter.min_tokens);
    c.filter.min_followup_days = f->value("min_followup_days", c.filter.min_followup_days);
  }
  if (j.contains("provider")) c.provider = extraction::provider_config_from_json(j.at("provider"));
  c.dev_fraction = j.value("dev_fraction", c.dev_fraction);
  if (auto b = j.find("baselines"); b != j.end()) {
    auto& o = c.baselines;
    if (b->contains("tasks")) o.tasks = parse_enum_list<baselines::Task>(b->at("tasks"), "task", parse_task);
    if (b->contains("models")) {
      o.models = parse_enum_list<baselines::ModelKind>(b->at("models"), "model", baselines::parse_model_kind);
    }
    if (b->contains("schemes")) {
      o.schemes = parse_enum_list<baselines::Scheme>(b->at("schemes"), "scheme", baselines::parse_scheme);
    }
    if (auto g = b->find("grid"); g != b->end()) {
      o.grid.C = g->value("C", o.grid.C);
      o.grid.n_estimators = g->value("n_estimators", o.grid.n_estimators);
      o.grid.max_depth = g->value("max_depth", o.grid.max_depth);
    }
    o.fractions = b->value("fractions", o.fractions);
    o.repeats = b->value("repeats", o.repeats);
    o.min_df = b->value("min_df", o.min_df);
    o.logreg.max_iterations = b->value("max_iterations", o.logreg.max_iterations);
    o.logreg.tolerance = b->value("tolerance", o.logreg.tolerance);
  }
  if (auto t = j.find("topics"); t != j.end()) {
    c.topics.pca_components = t->value("pca_components", c.topics.pca_components);
    c.topics.min_cluster_size = t->value("min_cluster_size", c.topics.min_cluster_size);
    c.topics.min_samples = t->value("min_samples", c.topics.min_samples);
    c.topics.tau = t->value("tau", c.topics.tau);
    c.topics.top_n = t->value("top_n", c.topics.top_n);
    if (t->contains("embedding")) c.topics.embedding = topics::embedding_config_from_json(t->at("embedding"));
    if (t->contains("grouping")) c.topics.grouping = resolve(base_dir, t->at("grouping").get<std::string>());
  }
  c.subgroup_attribute = j.value("subgroup_attribute", c.subgroup_attribute);
  if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
  c.seed = j.value("seed", c.seed);
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  const Json j = Json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw InvalidInput("config " + path.string() + " is not a JSON object");
  try {
    return pipeline_config_from_json(j, path.parent_path());
  } catch (const Json::exception& e) {
    throw InvalidInput("config " + path.string() + ": " + e.what());
  }
}

Json to_json(const PipelineConfig& c) {
  Json j;
  if (c.corpus_dir) j["corpus_dir"] = c.corpus_dir->string();
  j["generator"] = corpus::to_json(c.generator);
  if (c.lexicon) j["lexicon"] = c.lexicon->string();
  if (c.prompt_dir) j["prompt_dir"] = c.prompt_dir->string();
  j["filter"] = {{"min_tokens", c.filter.min_tokens}, {"min_followup_days", c.filter.min_followup_days}};
  j["provider"] = extraction::to_json(c.provider);
  j["dev_fraction"] = c.dev_fraction;
  Json tasks = Json::array(), models = Json::array(), schemes = Json::array();
  for (auto t : c.baselines.tasks) tasks.push_back(baselines::to_string(t));
  for (auto m : c.baselines.models) models.push_back(baselines::to_string(m));
  for (auto s : c.baselines.schemes) schemes.push_back(baselines::to_string(s));
  j["baselines"] = {{"tasks", tasks},
                    {"models", models},
                    {"schemes", schemes},
                    {"grid",
                     {{"C", c.baselines.grid.C},
                      {"n_estimators", c.baselines.grid.n_estimators},
                      {"max_depth", c.baselines.grid.max_depth}}},
                    {"fractions", c.baselines.fractions},
                    {"repeats", c.baselines.repeats},
                    {"min_df", c.baselines.min_df},
                    {"max_iterations", c.baselines.logreg.max_iterations},
                    {"tolerance", c.baselines.logreg.tolerance}};
  j["topics"] = {{"pca_components", c.topics.pca_components},
                 {"min_cluster_size", c.topics.min_cluster_size},
                 {"min_samples", c.topics.min_samples},
                 {"tau", c.topics.tau},
                 {"top_n", c.topics.top_n},
                 {"embedding", topics::to_json(c.topics.embedding)}};
  if (c.topics.grouping) j["topics"]["grouping"] = c.topics.grouping->string();
  j["subgroup_attribute"] = c.subgroup_attribute;
  j["output_dir"] = c.output_dir.string();
  j["seed"] = c.seed;
  return j;
}

}  // namespace switchminer::pipeline
