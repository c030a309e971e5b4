#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "switchminer/corpus.hpp"
#include "switchminer/lexicon.hpp"
#include "switchminer/metrics.hpp"
#include "switchminer/prompts.hpp"
#include "switchminer/provider.hpp"

namespace switchminer::extraction {

struct RawTriple {
  std::string started;
  std::string stopped;
  std::string reason;
  bool operator==(const RawTriple&) const = default;
};

/// Total: strict parse in the declared format, then the fallback cascade
/// structured_object → labeled_lines → pipe_delimited, then the whole trimmed
/// text as the reason with "none" for both drugs.
RawTriple parse_extraction(std::string_view raw_response, OutputFormat declared);

/// Strict parse only; nullopt when the text is not in that format.
std::optional<RawTriple> parse_strict(std::string_view raw_response, OutputFormat format);

struct NormalizedTriple {
  ModalitySet started;
  ModalitySet stopped;
  std::string reason;
  /// One entry per fragment that did not map to a modality.
  std::vector<std::string> log;
};

/// Splits each drug field on "," and " and " and maps fragments through the
/// lexicon; "none", "n/a", "not mentioned" and empty fragments map to nothing.
NormalizedTriple normalize_extraction(const RawTriple& raw, const switching::ModalityLexicon& lexicon);

struct ExtractionResult {
  std::string note_id;
  int prompt_id = 0;
  std::string started_raw;
  std::string stopped_raw;
  std::string reason_raw;
  ModalitySet started;
  ModalitySet stopped;
  std::string reason;
  long provider_latency_ms = 0;
  std::string raw_response;
  std::optional<std::string> error;  // set when the note could not be extracted
  std::vector<std::string> normalization_log;
  bool operator==(const ExtractionResult&) const = default;
};

Json to_json(const ExtractionResult& r);
ExtractionResult extraction_result_from_json(const Json& j);

/// One result per note, in input order. Calls run on up to
/// `config.max_parallel` threads; failures become results with `error` set.
std::vector<ExtractionResult> extract_switch_info(const std::vector<corpus::ClinicalNote>& notes,
                                                  const PromptSpec& spec, const ProviderConfig& config,
                                                  ChatProvider& provider,
                                                  const switching::ModalityLexicon& lexicon);

/// Reviewer judgment simulated from the gold label: drugs correct when the
/// normalized sets equal gold; reason accurate when it contains the gold
/// reason; hallucination when the reason has a term absent from the note.
Json to_json(const metrics::AnnotationVerdict& v);
/// Throws InvalidInput when a required field is missing or mistyped.
metrics::AnnotationVerdict verdict_from_json(const Json& j);

metrics::AnnotationVerdict auto_verdict(const ExtractionResult& result, const corpus::ClinicalNote& note,
                                        const corpus::GoldLabel& gold);

}  // namespace switchminer::extraction
