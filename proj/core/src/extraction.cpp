#include "switchminer/extraction.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <set>
#include <thread>

#include "switchminer/tokenizer.hpp"

namespace switchminer::extraction {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string json_field(const Json& v) {
  if (v.is_null()) return "none";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& item : v) {
      if (!out.empty()) out += ", ";
      out += json_field(item);
    }
    return out.empty() ? "none" : out;
  }
  return v.dump(-1, ' ', false, Json::error_handler_t::replace);
}

std::optional<RawTriple> parse_structured(std::string_view text) {
  const auto open = text.find('{');
  const auto close = text.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) return std::nullopt;
  const Json j = Json::parse(text.substr(open, close - open + 1), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  // Keys are matched case-insensitively.
  std::optional<RawTriple> out;
  RawTriple t;
  bool has_started = false, has_stopped = false;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = lower(it.key());
    if (key == "started") {
      t.started = json_field(it.value());
      has_started = true;
    } else if (key == "stopped") {
      t.stopped = json_field(it.value());
      has_stopped = true;
    } else if (key == "reason") {
      t.reason = json_field(it.value());
    }
  }
  if (has_started && has_stopped) out = t;
  return out;
}

// Splits "key: value" and returns the lowercased key.
std::optional<std::pair<std::string, std::string>> key_value(std::string_view part) {
  const auto colon = part.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  std::string key = lower(trim(part.substr(0, colon)));
  // Tolerate list markers such as "- Started:" or "**Started**:".
  key.erase(std::remove_if(key.begin(), key.end(), [](char c) { return c == '*' || c == '-' || c == '#'; }),
            key.end());
  return std::make_pair(trim(key), trim(part.substr(colon + 1)));
}

std::optional<RawTriple> parse_pipe(std::string_view text) {
  for (std::size_t start = 0; start < text.size();) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    std::vector<std::string_view> parts;
    for (std::size_t p = 0;;) {
      const auto bar = line.find('|', p);
      parts.push_back(line.substr(p, bar == std::string_view::npos ? std::string_view::npos : bar - p));
      if (bar == std::string_view::npos) break;
      p = bar + 1;
    }
    if (parts.size() < 3) continue;
    RawTriple t;
    bool s = false, st = false, r = false;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      auto kv = key_value(parts[i]);
      if (!kv) continue;
      if (kv->first == "started") {
        t.started = kv->second;
        s = true;
      } else if (kv->first == "stopped") {
        t.stopped = kv->second;
        st = true;
      } else if (kv->first == "reason") {
        // Reason runs to the end of the line, bars included.
        std::string rest(parts[i].substr(parts[i].find(':') + 1));
        for (std::size_t k = i + 1; k < parts.size(); ++k) rest += "|" + std::string(parts[k]);
        t.reason = trim(rest);
        r = true;
        break;
      }
    }
    if (s && st && r) return t;
  }
  return std::nullopt;
}

std::optional<RawTriple> parse_labeled(std::string_view text) {
  RawTriple t;
  bool s = false, st = false, r = false;
  for (std::size_t start = 0; start < text.size();) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto kv = key_value(text.substr(start, end - start));
    start = end + 1;
    if (!kv) continue;
    if (kv->first == "started" && !s) {
      t.started = kv->second;
      s = true;
    } else if (kv->first == "stopped" && !st) {
      t.stopped = kv->second;
      st = true;
    } else if (kv->first == "reason" && !r) {
      t.reason = kv->second;
      r = true;
    }
  }
  if (s && st && r) return t;
  return std::nullopt;
}

}  // namespace

std::optional<RawTriple> parse_strict(std::string_view raw_response, OutputFormat format) {
  switch (format) {
    case OutputFormat::StructuredObject:
      return parse_structured(raw_response);
    case OutputFormat::PipeDelimited:
      return parse_pipe(raw_response);
    case OutputFormat::LabeledLines:
      return parse_labeled(raw_response);
  }
  return std::nullopt;
}

RawTriple parse_extraction(std::string_view raw_response, OutputFormat declared) {
  if (auto t = parse_strict(raw_response, declared)) return *t;
  for (auto f : {OutputFormat::StructuredObject, OutputFormat::LabeledLines, OutputFormat::PipeDelimited}) {
    if (f == declared) continue;
    if (auto t = parse_strict(raw_response, f)) return *t;
  }
  return {"none", "none", trim(raw_response)};
}

namespace {

std::vector<std::string> split_fragments(const std::string& field) {
  std::vector<std::string> out;
  const std::string low = lower(field);
  std::size_t start = 0;
  while (start <= field.size()) {
    const auto comma = low.find(',', start);
    const auto conj = low.find(" and ", start);
    const auto cut = std::min(comma, conj);
    if (cut == std::string::npos) {
      out.push_back(trim(std::string_view(field).substr(start)));
      break;
    }
    out.push_back(trim(std::string_view(field).substr(start, cut - start)));
    start = cut + (cut == comma ? 1 : 5);
  }
  return out;
}

bool is_none(std::string fragment) {
  while (!fragment.empty() && (fragment.back() == '.' || fragment.back() == ';')) fragment.pop_back();
  fragment = lower(trim(fragment));
  return fragment.empty() || fragment == "none" || fragment == "n/a" || fragment == "not mentioned";
}

ModalitySet normalize_field(const std::string& field, const char* name, const switching::ModalityLexicon& lexicon,
                            std::vector<std::string>& log) {
  ModalitySet out;
  for (const auto& fragment : split_fragments(field)) {
    if (is_none(fragment)) continue;
    const auto match = lexicon.map(fragment);
    if (match.kind == switching::MatchKind::Matched) {
      out.insert(match.modality);
    } else {
      log.push_back(std::string(name) + (match.kind == switching::MatchKind::Excluded ? " excluded: " : " unmatched: ") +
                    fragment);
    }
  }
  return out;
}

}  // namespace

NormalizedTriple normalize_extraction(const RawTriple& raw, const switching::ModalityLexicon& lexicon) {
  NormalizedTriple out;
  out.started = normalize_field(raw.started, "started", lexicon, out.log);
  out.stopped = normalize_field(raw.stopped, "stopped", lexicon, out.log);
  out.reason = trim(raw.reason);
  return out;
}

Json to_json(const ExtractionResult& r) {
  Json j = {{"note_id", r.note_id},
            {"prompt_id", r.prompt_id},
            {"started_raw", r.started_raw},
            {"stopped_raw", r.stopped_raw},
            {"reason_raw", r.reason_raw},
            {"started", modality_names(r.started)},
            {"stopped", modality_names(r.stopped)},
            {"reason", r.reason},
            {"provider_latency_ms", r.provider_latency_ms},
            {"raw_response", r.raw_response},
            {"normalization_log", r.normalization_log}};
  j["error"] = r.error ? Json(*r.error) : Json(nullptr);
  return j;
}

ExtractionResult extraction_result_from_json(const Json& j) {
  ExtractionResult r;
  r.note_id = j.at("note_id").get<std::string>();
  r.prompt_id = j.at("prompt_id").get<int>();
  r.started_raw = j.value("started_raw", "");
  r.stopped_raw = j.value("stopped_raw", "");
  r.reason_raw = j.value("reason_raw", "");
  r.started = modality_set_from_names(j.value("started", std::vector<std::string>{}));
  r.stopped = modality_set_from_names(j.value("stopped", std::vector<std::string>{}));
  r.reason = j.value("reason", "");
  r.provider_latency_ms = j.value("provider_latency_ms", 0L);
  r.raw_response = j.value("raw_response", "");
  r.normalization_log = j.value("normalization_log", std::vector<std::string>{});
  if (auto e = j.find("error"); e != j.end() && e->is_string()) r.error = e->get<std::string>();
  return r;
}

Json to_json(const metrics::AnnotationVerdict& v) {
  return {{"note_id", v.note_id},
          {"prompt_id", v.prompt_id},
          {"started_correct", v.started_correct},
          {"stopped_correct", v.stopped_correct},
          {"reason_accurate", v.reason_accurate},
          {"hallucination", v.hallucination},
          {"comment", v.comment}};
}

metrics::AnnotationVerdict verdict_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidInput("verdict must be a JSON object");
  auto flag = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_boolean()) throw InvalidInput(std::string("verdict field '") + key + "' must be a boolean");
    return it->get<bool>();
  };
  metrics::AnnotationVerdict v;
  auto id = j.find("note_id");
  if (id == j.end() || !id->is_string()) throw InvalidInput("verdict field 'note_id' must be a string");
  v.note_id = id->get<std::string>();
  if (auto p = j.find("prompt_id"); p != j.end()) {
    if (!p->is_number_integer()) throw InvalidInput("verdict field 'prompt_id' must be an integer");
    v.prompt_id = p->get<int>();
  }
  v.started_correct = flag("started_correct");
  v.stopped_correct = flag("stopped_correct");
  v.reason_accurate = flag("reason_accurate");
  v.hallucination = flag("hallucination");
  if (auto c = j.find("comment"); c != j.end()) {
    if (!c->is_string()) throw InvalidInput("verdict field 'comment' must be a string");
    v.comment = c->get<std::string>();
  }
  return v;
}

std::vector<ExtractionResult> extract_switch_info(const std::vector<corpus::ClinicalNote>& notes,
                                                  const PromptSpec& spec, const ProviderConfig& config,
                                                  ChatProvider& provider,
                                                  const switching::ModalityLexicon& lexicon) {
  config.validate();
  std::vector<ExtractionResult> results(notes.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < notes.size(); i = next++) {
      const auto& note = notes[i];
      ExtractionResult& r = results[i];
      r.note_id = note.note_id;
      r.prompt_id = spec.prompt_id;
      if (note.text.empty()) {
        r.error = "empty note text";
        continue;
      }
      ChatRequest req;
      req.messages = render_prompt(spec, note);
      req.model = config.model_name;
      req.temperature = config.temperature;
      req.top_p = config.top_p;
      req.max_tokens = config.max_response_tokens;
      req.note_id = note.note_id;
      req.prompt_id = spec.prompt_id;
      req.format = spec.output_format;
      ChatResponse resp;
      try {
        resp = provider.complete(req);
      } catch (const std::exception& e) {
        resp.ok = false;
        resp.error = e.what();
      }
      r.provider_latency_ms = resp.latency_ms;
      if (!resp.ok) {
        r.error = resp.error.empty() ? "provider failure" : resp.error;
        continue;
      }
      r.raw_response = resp.content;
      const RawTriple raw = parse_extraction(resp.content, spec.output_format);
      r.started_raw = raw.started;
      r.stopped_raw = raw.stopped;
      r.reason_raw = raw.reason;
      NormalizedTriple norm = normalize_extraction(raw, lexicon);
      r.started = norm.started;
      r.stopped = norm.stopped;
      r.reason = std::move(norm.reason);
      r.normalization_log = std::move(norm.log);
    }
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(config.max_parallel), notes.size());
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return results;
}

metrics::AnnotationVerdict auto_verdict(const ExtractionResult& result, const corpus::ClinicalNote& note,
                                        const corpus::GoldLabel& gold) {
  metrics::AnnotationVerdict v;
  v.note_id = result.note_id;
  v.prompt_id = result.prompt_id;
  v.started_correct = !result.error && result.started == gold.started;
  v.stopped_correct = !result.error && result.stopped == gold.stopped;
  v.reason_accurate = !result.error && !gold.reason_text.empty() &&
                      lower(result.reason).find(lower(gold.reason_text)) != std::string::npos;
  const auto note_terms = baselines::tokenize(note.text);
  const std::set<std::string> vocabulary(note_terms.begin(), note_terms.end());
  for (const auto& term : baselines::tokenize(result.reason)) {
    if (!vocabulary.contains(term)) {
      v.hallucination = true;
      v.comment = "reason term not in note: " + term;
      break;
    }
  }
  return v;
}

}  // namespace switchminer::extraction
