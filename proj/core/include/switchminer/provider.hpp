#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "switchminer/corpus.hpp"
#include "switchminer/jsonl.hpp"
#include "switchminer/prompts.hpp"

namespace switchminer::extraction {

/// Environment variable holding the provider bearer token.
inline constexpr const char* kProviderTokenEnv = "SWITCHMINER_PROVIDER_TOKEN";

struct RetryPolicy {
  int max_attempts = 4;
  int backoff_base_ms = 1000;
  double backoff_multiplier = 2.0;
  /// Delay before attempt `attempt + 1`, i.e. after `attempt` failures (1-based).
  [[nodiscard]] int delay_ms(int attempt) const;
};

/// Noise model of the deterministic mock provider.
struct MockNoise {
  double swap_rate = 0.0;           // per field
  double hallucination_rate = 0.0;  // per response
  std::uint64_t seed = 0;
  int max_delay_ms = 0;  // simulated, randomized completion delay
};

struct ProviderConfig {
  std::string endpoint = "mock";  // base URL of an OpenAI-compatible server, or "mock"
  std::string model_name = "gpt-4";
  double temperature = 0.0;
  int max_response_tokens = 500;
  double top_p = 1.0;
  int max_parallel = 4;
  int timeout_ms = 120000;
  RetryPolicy retry;
  MockNoise mock;

  [[nodiscard]] bool is_mock() const { return endpoint == "mock"; }
  /// Throws InvalidInput when an invariant does not hold.
  void validate() const;
};

ProviderConfig provider_config_from_json(const Json& j);
Json to_json(const ProviderConfig& c);

struct ChatRequest {
  std::vector<ChatMessage> messages;
  std::string model;
  double temperature = 0.0;
  double top_p = 1.0;
  int max_tokens = 500;
  // Not sent on the wire; lets the mock find its fixture.
  std::string note_id;
  int prompt_id = 0;
  OutputFormat format = OutputFormat::StructuredObject;
};

struct ChatResponse {
  bool ok = false;
  int status = 0;  // last HTTP status, 0 for transport failures
  std::string content;
  long latency_ms = 0;
  int attempts = 0;
  std::string error;
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  /// Must be safe to call concurrently.
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

/// Wire body of an OpenAI-compatible chat-completion request.
Json chat_request_body(const ChatRequest& request);
/// choices[0].message.content, if present.
std::optional<std::string> chat_response_content(const Json& body);
bool is_retryable_status(int status);

/// Splits "http://host:port/prefix" into ("http://host:port", "/prefix").
std::pair<std::string, std::string> split_base_url(const std::string& url);

class HttpChatProvider : public ChatProvider {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  HttpChatProvider(ProviderConfig config, std::string token, Sleeper sleeper = {});
  /// Reads the token from kProviderTokenEnv (empty when unset).
  static std::string token_from_environment();

  ChatResponse complete(const ChatRequest& request) override;

 private:
  ProviderConfig config_;
  std::string token_;
  Sleeper sleeper_;
};

struct MockOutput {
  std::string text;
  bool started_swapped = false;
  bool stopped_swapped = false;
  bool hallucinated = false;
  int delay_ms = 0;
};

/// The text a faulty-but-honest extractor would return for `note`. Each field of
/// `gold` is reproduced verbatim unless swapped for a different modality's name;
/// a fabricated clause is appended to the reason with the hallucination rate.
/// Deterministic in (noise.seed, note id, prompt id).
MockOutput mock_response(const corpus::ClinicalNote& note, const corpus::GoldLabel& gold, OutputFormat format,
                         const MockNoise& noise, int prompt_id);

/// How the mock names a modality it substitutes.
std::string_view mock_display_name(Modality m);

/// Renders a (started, stopped, reason) answer in the given format.
std::string format_answer(OutputFormat format, const std::string& started, const std::string& stopped,
                          const std::string& reason);

class MockProvider : public ChatProvider {
 public:
  MockProvider(const corpus::Corpus& corpus, MockNoise noise);
  ChatResponse complete(const ChatRequest& request) override;

 private:
  std::unordered_map<std::string, const corpus::ClinicalNote*> notes_;
  std::unordered_map<std::string, const corpus::GoldLabel*> gold_;
  MockNoise noise_;
};

/// The provider described by `config`: the mock (which needs `corpus`) or an
/// HTTP client authenticated from the environment.
std::unique_ptr<ChatProvider> make_provider(const ProviderConfig& config, const corpus::Corpus* corpus);

}  // namespace switchminer::extraction
