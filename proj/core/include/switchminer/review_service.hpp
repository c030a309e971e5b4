#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "switchminer/extraction.hpp"
#include "switchminer/jsonl.hpp"
#include "switchminer/metrics.hpp"

namespace switchminer::review {

/// Status code plus JSON payload, shaped like an HTTP response.
struct Reply {
  int status = 200;
  Json body;
};

struct ReviewSession {
  std::string session_id;
  int prompt_id = 0;
  std::uint64_t seed = 0;
  std::string annotator;
  std::string created_at;  // UTC, ISO 8601
  std::vector<std::string> queue;
  std::size_t cursor = 0;  // index of the first unannotated note

  [[nodiscard]] bool complete() const { return cursor == queue.size(); }
};

/// Deterministic in (prompt_id, seed, annotator), so recreating a session resumes it.
std::string session_id_for(int prompt_id, std::uint64_t seed, const std::string& annotator);

/// Started/stopped micro-F1 with the reviewer's verdicts as gold, reason
/// accuracy, hallucination rate and n. Every rate is null when n is 0.
Json review_metrics(const std::vector<metrics::AnnotationVerdict>& verdicts);

/// Verdicts from the valid prefix of an annotation log (stops at the first
/// line that is torn, unparsable or fails its checksum).
std::vector<metrics::AnnotationVerdict> read_annotation_log(const std::filesystem::path& log_path);

/// Serves the dev-split extractions of a pipeline output directory for review.
/// Sessions live under `store_dir/<session_id>/` as session.json plus an
/// append-only annotations.jsonl whose lines carry a SHA-256 checksum.
/// All calls on one service are serialized.
class ReviewService {
 public:
  ReviewService(std::filesystem::path artifacts_dir, std::filesystem::path store_dir);

  Reply create_session(int prompt_id, std::uint64_t seed, const std::string& annotator);
  Reply next_item(const std::string& session_id);
  Reply submit_annotation(const std::string& session_id, const Json& verdict);
  Reply session_metrics(const std::string& session_id);
  Reply health();

 private:
  struct Entry {
    metrics::AnnotationVerdict verdict;
    std::string verdict_hash;
  };
  struct State {
    ReviewSession session;
    std::vector<Entry> entries;
  };

  State* find(const std::string& session_id);
  State* load(const std::string& session_id);
  void replay(State& state);
  const std::map<std::string, extraction::ExtractionResult>* extractions(int prompt_id);
  const corpus::ClinicalNote* note(const std::string& note_id);
  Json progress(const State& s) const;
  Json metrics_json(const State& s) const;

  std::filesystem::path artifacts_dir_;
  std::filesystem::path store_dir_;
  std::mutex mutex_;
  std::map<std::string, std::unique_ptr<State>> sessions_;
  std::map<int, std::map<std::string, extraction::ExtractionResult>> extraction_cache_;
  std::optional<std::map<std::string, corpus::ClinicalNote>> notes_;
};

struct ServerOptions {
  std::string allowed_origin = "http://localhost:5173";
  /// When set, every route except /healthz requires `Authorization: Bearer <token>`.
  std::string token;
};

/// HTTP+JSON front end: POST /sessions, GET /sessions/{id}/next,
/// POST /sessions/{id}/annotations, GET /sessions/{id}/metrics, GET /healthz.
class ReviewServer {
 public:
  ReviewServer(ReviewService& service, ServerOptions options = {});
  ~ReviewServer();
  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  /// Blocks until stop(). Returns false if the address cannot be bound.
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it (negative on failure).
  int bind_to_any_port(const std::string& host);
  /// Serves on a socket bound by bind_to_any_port; blocks until stop().
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace switchminer::review
