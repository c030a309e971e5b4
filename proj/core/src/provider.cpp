#include "switchminer/provider.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "switchminer/error.hpp"

namespace switchminer::extraction {

int RetryPolicy::delay_ms(int attempt) const {
  return static_cast<int>(std::lround(backoff_base_ms * std::pow(backoff_multiplier, attempt - 1)));
}

void ProviderConfig::validate() const {
  if (!(temperature >= 0.0)) throw InvalidInput("provider.temperature must be >= 0");
  if (max_response_tokens < 1) throw InvalidInput("provider.max_response_tokens must be >= 1");
  if (max_parallel < 1) throw InvalidInput("provider.max_parallel must be >= 1");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw InvalidInput("provider.top_p must be in (0, 1]");
  if (retry.max_attempts < 1) throw InvalidInput("provider.retry.max_attempts must be >= 1");
  if (retry.backoff_base_ms < 0) throw InvalidInput("provider.retry.backoff_base_ms must be >= 0");
  if (mock.swap_rate < 0 || mock.swap_rate > 1) throw InvalidInput("provider.mock.swap_rate must be in [0, 1]");
  if (mock.hallucination_rate < 0 || mock.hallucination_rate > 1) {
    throw InvalidInput("provider.mock.hallucination_rate must be in [0, 1]");
  }
}

ProviderConfig provider_config_from_json(const Json& j) {
  ProviderConfig c;
  c.endpoint = j.value("endpoint", c.endpoint);
  c.model_name = j.value("model_name", c.model_name);
  c.temperature = j.value("temperature", c.temperature);
  c.max_response_tokens = j.value("max_response_tokens", c.max_response_tokens);
  c.top_p = j.value("top_p", c.top_p);
  c.max_parallel = j.value("max_parallel", c.max_parallel);
  c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
  if (auto r = j.find("retry"); r != j.end()) {
    c.retry.max_attempts = r->value("max_attempts", c.retry.max_attempts);
    c.retry.backoff_base_ms = r->value("backoff_base_ms", c.retry.backoff_base_ms);
    c.retry.backoff_multiplier = r->value("backoff_multiplier", c.retry.backoff_multiplier);
  }
  if (auto m = j.find("mock"); m != j.end()) {
    c.mock.swap_rate = m->value("swap_rate", c.mock.swap_rate);
    c.mock.hallucination_rate = m->value("hallucination_rate", c.mock.hallucination_rate);
    c.mock.seed = m->value("seed", c.mock.seed);
    c.mock.max_delay_ms = m->value("max_delay_ms", c.mock.max_delay_ms);
  }
  c.validate();
  return c;
}

Json to_json(const ProviderConfig& c) {
  return {{"endpoint", c.endpoint},
          {"model_name", c.model_name},
          {"temperature", c.temperature},
          {"max_response_tokens", c.max_response_tokens},
          {"top_p", c.top_p},
          {"max_parallel", c.max_parallel},
          {"timeout_ms", c.timeout_ms},
          {"retry",
           {{"max_attempts", c.retry.max_attempts},
            {"backoff_base_ms", c.retry.backoff_base_ms},
            {"backoff_multiplier", c.retry.backoff_multiplier}}},
          {"mock",
           {{"swap_rate", c.mock.swap_rate},
            {"hallucination_rate", c.mock.hallucination_rate},
            {"seed", c.mock.seed},
            {"max_delay_ms", c.mock.max_delay_ms}}}};
}

Json chat_request_body(const ChatRequest& request) {
  Json messages = Json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", request.model},
          {"messages", std::move(messages)},
          {"temperature", request.temperature},
          {"top_p", request.top_p},
          {"max_tokens", request.max_tokens}};
}

std::optional<std::string> chat_response_content(const Json& body) {
  if (!body.is_object()) return std::nullopt;
  auto choices = body.find("choices");
  if (choices == body.end() || !choices->is_array() || choices->empty()) return std::nullopt;
  const Json& first = (*choices)[0];
  if (!first.is_object()) return std::nullopt;
  auto message = first.find("message");
  if (message == first.end() || !message->is_object()) return std::nullopt;
  auto content = message->find("content");
  if (content == message->end() || !content->is_string()) return std::nullopt;
  return content->get<std::string>();
}

bool is_retryable_status(int status) { return status == 429 || status >= 500; }

std::pair<std::string, std::string> split_base_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', start);
  if (slash == std::string::npos) return {url, ""};
  std::string prefix = url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, slash), prefix};
}

HttpChatProvider::HttpChatProvider(ProviderConfig config, std::string token, Sleeper sleeper)
    : config_(std::move(config)), token_(std::move(token)), sleeper_(std::move(sleeper)) {
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string HttpChatProvider::token_from_environment() {
  const char* v = std::getenv(kProviderTokenEnv);
  return v ? std::string(v) : std::string();
}

ChatResponse HttpChatProvider::complete(const ChatRequest& request) {
  auto [base, prefix] = split_base_url(config_.endpoint);
  std::string path = prefix;
  if (path.size() < 17 || path.compare(path.size() - 17, 17, "/chat/completions") != 0) {
    path += "/v1/chat/completions";
  }
  const std::string body = dump_json(chat_request_body(request));
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

  ChatResponse out;
  const auto t0 = std::chrono::steady_clock::now();
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    out.attempts = attempt;
    httplib::Client client(base);
    client.set_connection_timeout(std::chrono::milliseconds(config_.timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(config_.timeout_ms));
    auto res = client.Post(path, headers, body, "application/json");
    bool retry = false;
    if (!res) {
      out.status = 0;
      out.error = "transport error: " + httplib::to_string(res.error());
      retry = true;
    } else {
      out.status = res->status;
      if (res->status == 200) {
        const Json parsed = Json::parse(res->body, nullptr, false);
        if (auto content = chat_response_content(parsed)) {
          out.ok = true;
          out.content = *content;
          out.error.clear();
        } else {
          out.error = "malformed provider payload";
        }
        break;
      }
      out.error = "HTTP " + std::to_string(res->status);
      retry = is_retryable_status(res->status);
    }
    if (!retry || attempt == config_.retry.max_attempts) break;
    sleeper_(std::chrono::milliseconds(config_.retry.delay_ms(attempt)));
  }
  out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::unique_ptr<ChatProvider> make_provider(const ProviderConfig& config, const corpus::Corpus* corpus) {
  if (config.is_mock()) {
    if (!corpus || !corpus->gold) throw InvalidInput("the mock provider needs a corpus with gold labels");
    return std::make_unique<MockProvider>(*corpus, config.mock);
  }
  return std::make_unique<HttpChatProvider>(config, HttpChatProvider::token_from_environment());
}

}  // namespace switchminer::extraction
