#include "switchminer/embedding.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <thread>

#include "httplib.h"
#include "switchminer/error.hpp"
#include "switchminer/hashing.hpp"
#include "switchminer/tokenizer.hpp"

namespace switchminer::topics {

namespace {

void normalize_rows(Matrix& m, std::vector<bool>& empty) {
  empty.assign(m.rows, false);
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (double v : m.row(i)) s += v * v;
    if (s == 0.0) {
      empty[i] = true;
      continue;
    }
    const double norm = std::sqrt(s);
    for (double& v : m.row(i)) v /= norm;
  }
}

}  // namespace

EmbeddingSet hashing_embed(const std::vector<std::string>& texts, std::size_t dim, const std::vector<std::string>& ids) {
  if (dim == 0) throw InvalidInput("hashing embedder: dimension must be positive");
  EmbeddingSet out;
  out.ids = ids;
  out.provider = "hashing-" + std::to_string(dim);
  out.normalized = true;
  out.vectors = Matrix(texts.size(), dim);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto terms = baselines::tokenize(texts[i]);
    auto add = [&](const std::string& feature) {
      const std::uint64_t h = fnv1a64(feature);
      out.vectors(i, h % dim) += (h >> 63) ? -1.0 : 1.0;
    };
    for (std::size_t t = 0; t < terms.size(); ++t) {
      add(terms[t]);
      if (t + 1 < terms.size()) add(terms[t] + " " + terms[t + 1]);
    }
  }
  normalize_rows(out.vectors, out.empty_input);
  return out;
}

EmbeddingConfig embedding_config_from_json(const Json& j) {
  EmbeddingConfig c;
  c.provider = j.value("provider", c.provider);
  c.dim = j.value("dim", c.dim);
  c.endpoint = j.value("endpoint", c.endpoint);
  c.model_name = j.value("model_name", c.model_name);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
  if (auto r = j.find("retry"); r != j.end()) {
    c.retry.max_attempts = r->value("max_attempts", c.retry.max_attempts);
    c.retry.backoff_base_ms = r->value("backoff_base_ms", c.retry.backoff_base_ms);
    c.retry.backoff_multiplier = r->value("backoff_multiplier", c.retry.backoff_multiplier);
  }
  if (j.contains("checkpoint")) c.checkpoint = j.at("checkpoint").get<std::string>();
  if (c.provider != "hashing" && c.provider != "remote") {
    throw InvalidInput("embedding.provider must be \"hashing\" or \"remote\"");
  }
  if (c.batch_size < 1) throw InvalidInput("embedding.batch_size must be >= 1");
  return c;
}

Json to_json(const EmbeddingConfig& c) {
  return {{"provider", c.provider},
          {"dim", c.dim},
          {"endpoint", c.endpoint},
          {"model_name", c.model_name},
          {"batch_size", c.batch_size},
          {"timeout_ms", c.timeout_ms},
          {"retry",
           {{"max_attempts", c.retry.max_attempts},
            {"backoff_base_ms", c.retry.backoff_base_ms},
            {"backoff_multiplier", c.retry.backoff_multiplier}}},
          {"checkpoint", c.checkpoint.string()}};
}

namespace {

// index → embedding rows already fetched for the same text.
std::map<std::size_t, std::vector<double>> load_checkpoint(const std::filesystem::path& path,
                                                           const std::vector<std::string>& texts) {
  std::map<std::size_t, std::vector<double>> done;
  if (path.empty() || !std::filesystem::exists(path)) return done;
  for (const auto& j : read_jsonl(path)) {
    const auto i = j.value("index", std::size_t{0});
    if (i < texts.size() && j.value("text_sha256", "") == sha256_hex(texts[i])) {
      done[i] = j.at("embedding").get<std::vector<double>>();
    }
  }
  return done;
}

}  // namespace

EmbeddingSet embed_texts(const std::vector<std::string>& texts, const EmbeddingConfig& config,
                         const std::vector<std::string>& ids) {
  if (texts.empty()) throw InvalidInput("embed_texts: no texts");
  if (config.provider == "hashing") return hashing_embed(texts, config.dim, ids);

  auto done = load_checkpoint(config.checkpoint, texts);
  std::ofstream checkpoint;
  if (!config.checkpoint.empty()) {
    if (config.checkpoint.has_parent_path()) std::filesystem::create_directories(config.checkpoint.parent_path());
    checkpoint.open(config.checkpoint, std::ios::app);
  }
  auto [base, prefix] = extraction::split_base_url(config.endpoint);
  const std::string path = prefix + "/v1/embeddings";
  httplib::Headers headers;
  if (const auto token = extraction::HttpChatProvider::token_from_environment(); !token.empty()) {
    headers.emplace("Authorization", "Bearer " + token);
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (!done.contains(i)) pending.push_back(i);
  }
  for (std::size_t start = 0; start < pending.size(); start += static_cast<std::size_t>(config.batch_size)) {
    const std::size_t end = std::min(pending.size(), start + static_cast<std::size_t>(config.batch_size));
    Json input = Json::array();
    for (std::size_t k = start; k < end; ++k) input.push_back(texts[pending[k]]);
    const std::string body = dump_json({{"model", config.model_name}, {"input", input}});
    std::string last_error;
    bool ok = false;
    for (int attempt = 1; attempt <= config.retry.max_attempts && !ok; ++attempt) {
      httplib::Client client(base);
      client.set_connection_timeout(std::chrono::milliseconds(config.timeout_ms));
      client.set_read_timeout(std::chrono::milliseconds(config.timeout_ms));
      auto res = client.Post(path, headers, body, "application/json");
      bool retry = true;
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
      } else if (res->status == 200) {
        const Json parsed = Json::parse(res->body, nullptr, false);
        const Json* data = parsed.is_object() && parsed.contains("data") ? &parsed.at("data") : nullptr;
        if (data && data->is_array() && data->size() == end - start) {
          for (std::size_t k = 0; k < data->size(); ++k) {
            const Json& item = (*data)[k];
            const std::size_t slot = item.value("index", k);
            if (slot >= end - start) break;
            const std::size_t i = pending[start + slot];
            done[i] = item.at("embedding").get<std::vector<double>>();
            if (checkpoint) {
              checkpoint << dump_json({{"index", i}, {"text_sha256", sha256_hex(texts[i])}, {"embedding", done[i]}})
                         << '\n';
            }
          }
          checkpoint.flush();
          ok = true;
          break;
        }
        last_error = "malformed embeddings payload";
        retry = false;
      } else {
        last_error = "HTTP " + std::to_string(res->status);
        retry = extraction::is_retryable_status(res->status);
      }
      if (!retry) break;
      if (attempt < config.retry.max_attempts) {
        std::this_thread::sleep_for(std::chrono::milliseconds(config.retry.delay_ms(attempt)));
      }
    }
    if (!ok) {
      throw IoError("embedding provider failed (" + last_error + "); " + std::to_string(done.size()) + " of " +
                    std::to_string(texts.size()) + " rows saved" +
                    (config.checkpoint.empty() ? std::string() : " to " + config.checkpoint.string()));
    }
  }

  EmbeddingSet out;
  out.ids = ids;
  out.provider = "remote:" + config.model_name;
  const std::size_t dim = done.begin()->second.size();
  out.vectors = Matrix(texts.size(), dim);
  for (const auto& [i, v] : done) {
    if (v.size() != dim) throw IoError("embedding provider returned rows of differing dimension");
    for (std::size_t c = 0; c < dim; ++c) {
      if (!std::isfinite(v[c])) throw IoError("embedding provider returned a non-finite value");
      out.vectors(i, c) = v[c];
    }
  }
  normalize_rows(out.vectors, out.empty_input);
  for (std::size_t i = 0; i < texts.size(); ++i) out.empty_input[i] = out.empty_input[i] || texts[i].empty();
  out.normalized = true;
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

}  // namespace switchminer::topics
