#include "switchminer/review_service.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <set>

#include <unistd.h>

#include "switchminer/error.hpp"
#include "switchminer/hashing.hpp"
#include "switchminer/random.hpp"

namespace switchminer::review {

namespace fs = std::filesystem;

namespace {

Json error_body(const std::string& code, const std::string& detail) { return {{"error", code}, {"detail", detail}}; }

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string verdict_hash(const metrics::AnnotationVerdict& v) { return sha256_hex(extraction::to_json(v).dump()); }

// A log line is the record without its checksum plus the SHA-256 of that
// record's compact serialization.
std::string log_line(std::size_t seq, const metrics::AnnotationVerdict& v, const std::string& hash) {
  Json record = {{"seq", seq}, {"verdict", extraction::to_json(v)}, {"verdict_hash", hash}};
  record["checksum"] = sha256_hex(record.dump());
  return record.dump() + "\n";
}

struct LogRecord {
  std::size_t seq;
  metrics::AnnotationVerdict verdict;
  std::string hash;
  std::size_t end_offset;  // byte offset just past the line
};

// Records of the valid prefix of a log, in order.
std::vector<LogRecord> scan_log(const std::string& text) {
  std::vector<LogRecord> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) break;  // torn final write
    Json record = Json::parse(text.substr(pos, nl - pos), nullptr, false);
    if (!record.is_object() || !record.contains("checksum") || !record["checksum"].is_string()) break;
    const std::string checksum = record["checksum"].get<std::string>();
    record.erase("checksum");
    if (sha256_hex(record.dump()) != checksum) break;
    try {
      LogRecord r{record.at("seq").get<std::size_t>(), extraction::verdict_from_json(record.at("verdict")),
                  record.at("verdict_hash").get<std::string>(), nl + 1};
      if (r.seq != out.size()) break;
      out.push_back(std::move(r));
    } catch (const std::exception&) {
      break;
    }
    pos = nl + 1;
  }
  return out;
}

void append_durably(const fs::path& path, const std::string& line) {
  std::FILE* f = std::fopen(path.string().c_str(), "ab");
  if (f == nullptr) throw IoError("cannot open " + path.string() + " for appending");
  const bool ok = std::fwrite(line.data(), 1, line.size(), f) == line.size() && std::fflush(f) == 0 &&
                  ::fsync(::fileno(f)) == 0;
  std::fclose(f);
  if (!ok) throw IoError("cannot append to " + path.string());
}

}  // namespace

std::string session_id_for(int prompt_id, std::uint64_t seed, const std::string& annotator) {
  const std::string key = std::to_string(prompt_id) + "\n" + std::to_string(seed) + "\n" + annotator;
  return "s-" + sha256_hex(key).substr(0, 16);
}

Json review_metrics(const std::vector<metrics::AnnotationVerdict>& verdicts) {
  const std::size_t n = verdicts.size();
  Json out = {{"n", n}};
  if (n == 0) {
    out["started_micro_f1"] = nullptr;
    out["stopped_micro_f1"] = nullptr;
    out["reason_accuracy"] = nullptr;
    out["hallucination_rate"] = nullptr;
    return out;
  }
  // The reviewer only says whether a field is right, so each verdict becomes
  // a sentinel pair: a correct field matches gold, a wrong one contributes a
  // false positive and a false negative.
  using Pair = std::pair<std::set<std::string>, std::set<std::string>>;
  std::vector<Pair> started, stopped;
  for (const auto& v : verdicts) {
    started.push_back({{"field"}, {v.started_correct ? "field" : "wrong"}});
    stopped.push_back({{"field"}, {v.stopped_correct ? "field" : "wrong"}});
  }
  const auto summary = metrics::annotation_summary(verdicts);
  out["started_micro_f1"] = metrics::micro_f1(started).f1;
  out["stopped_micro_f1"] = metrics::micro_f1(stopped).f1;
  out["reason_accuracy"] = *summary.accuracy;
  out["hallucination_rate"] = *summary.hallucination_rate;
  return out;
}

std::vector<metrics::AnnotationVerdict> read_annotation_log(const fs::path& log_path) {
  std::vector<metrics::AnnotationVerdict> out;
  if (!fs::exists(log_path)) return out;
  for (auto& r : scan_log(read_text_file(log_path))) out.push_back(std::move(r.verdict));
  return out;
}

ReviewService::ReviewService(fs::path artifacts_dir, fs::path store_dir)
    : artifacts_dir_(std::move(artifacts_dir)), store_dir_(std::move(store_dir)) {
  fs::create_directories(store_dir_);
}

const std::map<std::string, extraction::ExtractionResult>* ReviewService::extractions(int prompt_id) {
  if (auto it = extraction_cache_.find(prompt_id); it != extraction_cache_.end()) return &it->second;
  const fs::path path = artifacts_dir_ / ("prompts/dev_prompt_" + std::to_string(prompt_id) + ".jsonl");
  if (!fs::exists(path)) return nullptr;
  std::map<std::string, extraction::ExtractionResult> results;
  for (const auto& j : read_jsonl(path)) {
    auto r = extraction::extraction_result_from_json(j);
    results.emplace(r.note_id, std::move(r));
  }
  return &extraction_cache_.emplace(prompt_id, std::move(results)).first->second;
}

const corpus::ClinicalNote* ReviewService::note(const std::string& note_id) {
  if (!notes_) {
    notes_.emplace();
    const fs::path path = artifacts_dir_ / "corpus/notes.jsonl";
    if (fs::exists(path)) {
      for (const auto& j : read_jsonl(path)) {
        corpus::ClinicalNote n;
        n.note_id = j.value("note_id", "");
        n.patient_id = j.value("patient_id", "");
        n.encounter_date = Date::parse(j.value("encounter_date", "")).value_or(Date{});
        n.text = j.value("text", "");
        notes_->emplace(n.note_id, std::move(n));
      }
    }
  }
  auto it = notes_->find(note_id);
  return it == notes_->end() ? nullptr : &it->second;
}

void ReviewService::replay(State& state) {
  const fs::path log = store_dir_ / state.session.session_id / "annotations.jsonl";
  state.entries.clear();
  if (fs::exists(log)) {
    const std::string text = read_text_file(log);
    auto records = scan_log(text);
    // Keep only entries that follow the queue; anything after a mismatch is discarded.
    std::size_t keep = 0;
    while (keep < records.size() && keep < state.session.queue.size() &&
           records[keep].verdict.note_id == state.session.queue[keep]) {
      ++keep;
    }
    const std::size_t valid_bytes = keep == 0 ? 0 : records[keep - 1].end_offset;
    if (valid_bytes != text.size()) fs::resize_file(log, valid_bytes);
    for (std::size_t i = 0; i < keep; ++i) state.entries.push_back({records[i].verdict, records[i].hash});
  }
  state.session.cursor = state.entries.size();
}

ReviewService::State* ReviewService::load(const std::string& session_id) {
  const fs::path meta = store_dir_ / session_id / "session.json";
  if (!fs::exists(meta)) return nullptr;
  const Json j = Json::parse(read_text_file(meta));
  auto state = std::make_unique<State>();
  state->session.session_id = j.at("session_id").get<std::string>();
  state->session.prompt_id = j.at("prompt_id").get<int>();
  state->session.seed = j.at("seed").get<std::uint64_t>();
  state->session.annotator = j.at("annotator").get<std::string>();
  state->session.created_at = j.value("created_at", "");
  state->session.queue = j.at("queue").get<std::vector<std::string>>();
  replay(*state);
  return sessions_.insert_or_assign(session_id, std::move(state)).first->second.get();
}

ReviewService::State* ReviewService::find(const std::string& session_id) {
  if (auto it = sessions_.find(session_id); it != sessions_.end()) return it->second.get();
  // Only ids of the form produced by session_id_for name a directory.
  if (session_id.size() != 18 || session_id.rfind("s-", 0) != 0 ||
      !std::all_of(session_id.begin() + 2, session_id.end(), [](char c) { return std::isxdigit(c) != 0; })) {
    return nullptr;
  }
  return load(session_id);
}

Json ReviewService::progress(const State& s) const {
  return {{"session_id", s.session.session_id},
          {"annotated", s.entries.size()},
          {"total", s.session.queue.size()},
          {"remaining", s.session.queue.size() - s.session.cursor},
          {"cursor", s.session.cursor},
          {"complete", s.session.complete()}};
}

Json ReviewService::metrics_json(const State& s) const {
  std::vector<metrics::AnnotationVerdict> verdicts;
  for (const auto& e : s.entries) verdicts.push_back(e.verdict);
  Json m = review_metrics(verdicts);
  m["session_id"] = s.session.session_id;
  m["total"] = s.session.queue.size();
  return m;
}

Reply ReviewService::create_session(int prompt_id, std::uint64_t seed, const std::string& annotator) {
  std::lock_guard lock(mutex_);
  if (prompt_id < 1 || prompt_id > 6) return {400, error_body("invalid_prompt", "prompt_id must be 1..6")};
  const std::string id = session_id_for(prompt_id, seed, annotator);
  State* state = find(id);
  if (state == nullptr) {
    const auto* results = extractions(prompt_id);
    const fs::path split_path = artifacts_dir_ / "detect/split.json";
    if (results == nullptr || !fs::exists(split_path)) {
      return {409, error_body("missing_artifacts", "no dev-split extractions for prompt " + std::to_string(prompt_id) +
                                                       "; run the evaluate_prompts stage first")};
    }
    const Json split = Json::parse(read_text_file(split_path));
    auto owned = std::make_unique<State>();
    owned->session.session_id = id;
    owned->session.prompt_id = prompt_id;
    owned->session.seed = seed;
    owned->session.annotator = annotator;
    owned->session.created_at = utc_now();
    owned->session.queue = split.at("dev_notes").get<std::vector<std::string>>();
    for (const auto& n : owned->session.queue) {
      if (!results->contains(n)) {
        return {409, error_body("missing_artifacts", "dev note " + n + " has no extraction for prompt " +
                                                         std::to_string(prompt_id))};
      }
    }
    Rng rng(derive_seed(seed, "review-queue#" + std::to_string(prompt_id)));
    rng.shuffle(owned->session.queue);
    const fs::path dir = store_dir_ / id;
    fs::create_directories(dir);
    const Json meta = {{"session_id", id},
                       {"prompt_id", prompt_id},
                       {"seed", seed},
                       {"annotator", annotator},
                       {"created_at", owned->session.created_at},
                       {"queue", owned->session.queue}};
    // Written to a temporary file first so a crash never leaves half a session.
    write_text_file(dir / "session.json.tmp", dump_json(meta, 2) + "\n");
    fs::rename(dir / "session.json.tmp", dir / "session.json");
    replay(*owned);
    state = sessions_.insert_or_assign(id, std::move(owned)).first->second.get();
  }
  Json body = progress(*state);
  body["prompt_id"] = state->session.prompt_id;
  body["seed"] = state->session.seed;
  body["annotator"] = state->session.annotator;
  body["created_at"] = state->session.created_at;
  body["queue"] = state->session.queue;
  return {200, body};
}

Reply ReviewService::next_item(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  State* s = find(session_id);
  if (s == nullptr) return {404, error_body("unknown_session", "no session " + session_id)};
  Json body = progress(*s);
  if (s->session.complete()) {
    body["done"] = true;
    body["metrics"] = metrics_json(*s);
    return {200, body};
  }
  const std::string& note_id = s->session.queue[s->session.cursor];
  const auto* results = extractions(s->session.prompt_id);
  const auto* n = note(note_id);
  if (results == nullptr || !results->contains(note_id) || n == nullptr) {
    return {409, error_body("missing_artifacts", "artifacts for note " + note_id + " are no longer available")};
  }
  body["done"] = false;
  body["note"] = corpus::to_json(*n);
  body["extraction"] = extraction::to_json(results->at(note_id));
  return {200, body};
}

Reply ReviewService::submit_annotation(const std::string& session_id, const Json& payload) {
  std::lock_guard lock(mutex_);
  State* s = find(session_id);
  if (s == nullptr) return {404, error_body("unknown_session", "no session " + session_id)};
  metrics::AnnotationVerdict v;
  try {
    v = extraction::verdict_from_json(payload);
  } catch (const InvalidInput& e) {
    return {400, error_body("invalid_verdict", e.what())};
  }
  v.prompt_id = s->session.prompt_id;
  const std::string hash = verdict_hash(v);

  for (const auto& e : s->entries) {
    if (e.verdict.note_id != v.note_id) continue;
    if (e.verdict_hash == hash) {
      Json body = progress(*s);
      body["accepted"] = true;
      body["duplicate"] = true;
      return {200, body};
    }
    Json body = error_body("already_annotated", "note " + v.note_id + " already has a different verdict");
    body["expected_note_id"] = s->session.complete() ? Json(nullptr) : Json(s->session.queue[s->session.cursor]);
    return {409, body};
  }
  if (s->session.complete()) {
    Json body = error_body("session_complete", "every queued note is annotated");
    body["expected_note_id"] = nullptr;
    return {409, body};
  }
  const std::string& expected = s->session.queue[s->session.cursor];
  if (v.note_id != expected) {
    Json body = error_body("note_mismatch", "verdict is for " + v.note_id + " but the current note is " + expected);
    body["expected_note_id"] = expected;
    return {409, body};
  }
  append_durably(store_dir_ / session_id / "annotations.jsonl", log_line(s->entries.size(), v, hash));
  s->entries.push_back({v, hash});
  s->session.cursor = s->entries.size();
  Json body = progress(*s);
  body["accepted"] = true;
  body["duplicate"] = false;
  return {200, body};
}

Reply ReviewService::session_metrics(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  State* s = find(session_id);
  if (s == nullptr) return {404, error_body("unknown_session", "no session " + session_id)};
  return {200, metrics_json(*s)};
}

Reply ReviewService::health() { return {200, {{"status", "ok"}}}; }

}  // namespace switchminer::review
