#include <thread>

#include "switchminer/generator.hpp"
#include "switchminer/hashing.hpp"
#include "switchminer/provider.hpp"
#include "switchminer/random.hpp"

namespace switchminer::extraction {

std::string_view mock_display_name(Modality m) {
  switch (m) {
    case Modality::Oral:
      return "oral contraceptive pills";
    case Modality::Implant:
      return "implant";
    case Modality::IUD:
      return "IUD";
    case Modality::Injection:
      return "Depo injection";
    case Modality::Transdermal:
      return "transdermal patch";
    case Modality::Intravaginal:
      return "vaginal ring";
    case Modality::None:
      break;
  }
  return "none";
}

std::string format_answer(OutputFormat format, const std::string& started, const std::string& stopped,
                          const std::string& reason) {
  switch (format) {
    case OutputFormat::StructuredObject: {
      nlohmann::ordered_json j = {{"started", started}, {"stopped", stopped}, {"reason", reason}};
      return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    }
    case OutputFormat::PipeDelimited:
      return "started: " + started + " | stopped: " + stopped + " | reason: " + reason;
    case OutputFormat::LabeledLines:
      return "Started: " + started + "\nStopped: " + stopped + "\nReason: " + reason;
  }
  return {};
}

namespace {

std::string field_text(const std::string& raw) { return raw.empty() ? "none" : raw; }

// Draws are made unconditionally so each decision has a fixed stream position.
std::string maybe_swap(Rng& rng, double rate, ModalitySet truth, std::string text, bool& swapped) {
  const bool swap = rng.bernoulli(rate);
  std::vector<Modality> others;
  for (Modality m : kPrescribedModalities) {
    if (!truth.contains(m)) others.push_back(m);
  }
  const std::size_t choice = rng.below(others.size());
  swapped = swap;
  return swap ? std::string(mock_display_name(others[choice])) : std::move(text);
}

}  // namespace

MockOutput mock_response(const corpus::ClinicalNote& note, const corpus::GoldLabel& gold, OutputFormat format,
                         const MockNoise& noise, int prompt_id) {
  Rng rng(derive_seed(noise.seed, note.note_id + "#" + std::to_string(prompt_id)));
  MockOutput out;
  const std::string started =
      maybe_swap(rng, noise.swap_rate, gold.started, field_text(gold.started_raw), out.started_swapped);
  const std::string stopped =
      maybe_swap(rng, noise.swap_rate, gold.stopped, field_text(gold.stopped_raw), out.stopped_swapped);
  std::string reason = gold.reason_text.empty() ? "none" : gold.reason_text;
  out.hallucinated = rng.bernoulli(noise.hallucination_rate);
  const auto& fabricated = corpus::fabricated_reasons();
  const std::string& clause = fabricated[rng.below(fabricated.size())];
  if (out.hallucinated) reason += "; " + clause;
  out.delay_ms = noise.max_delay_ms > 0 ? rng.between(0, noise.max_delay_ms) : 0;
  out.text = format_answer(format, started, stopped, reason);
  return out;
}

MockProvider::MockProvider(const corpus::Corpus& corpus, MockNoise noise) : noise_(noise) {
  for (const auto& n : corpus.notes) notes_.emplace(n.note_id, &n);
  if (corpus.gold) {
    for (const auto& g : *corpus.gold) gold_.emplace(g.note_id, &g);
  }
}

ChatResponse MockProvider::complete(const ChatRequest& request) {
  ChatResponse r;
  r.attempts = 1;
  auto note = notes_.find(request.note_id);
  auto gold = gold_.find(request.note_id);
  if (note == notes_.end() || gold == gold_.end()) {
    r.status = 404;
    r.error = "mock provider has no gold label for note " + request.note_id;
    return r;
  }
  const MockOutput out = mock_response(*note->second, *gold->second, request.format, noise_, request.prompt_id);
  if (out.delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(out.delay_ms));
  r.ok = true;
  r.status = 200;
  r.content = out.text;
  // The simulated delay stands in for latency so artifacts stay reproducible.
  r.latency_ms = out.delay_ms;
  return r;
}

}  // namespace switchminer::extraction
