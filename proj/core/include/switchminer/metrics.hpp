#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "switchminer/modality.hpp"

namespace switchminer::metrics {

struct ClassCounts {
  long tp = 0, fp = 0, fn = 0;
  bool operator==(const ClassCounts&) const = default;
};

struct ConfusionTally {
  std::map<std::string, ClassCounts> per_class;
  long tp = 0, fp = 0, fn = 0;
};

struct MicroF1 {
  double f1 = 1.0;
  ConfusionTally tally;
};

/// Set-based micro-F1: TP = |gold ∩ pred|, FP = |pred \ gold|, FN = |gold \ pred|
/// pooled over pairs; 1.0 when nothing was counted.
template <typename Label>
MicroF1 micro_f1(const std::vector<std::pair<std::set<Label>, std::set<Label>>>& pairs) {
  MicroF1 out;
  auto key = [](const Label& l) {
    if constexpr (std::is_same_v<Label, std::string>) {
      return l;
    } else {
      return std::string(to_string(l));
    }
  };
  for (const auto& [gold, pred] : pairs) {
    for (const auto& l : pred) {
      auto& c = out.tally.per_class[key(l)];
      if (gold.contains(l)) {
        ++c.tp;
        ++out.tally.tp;
      } else {
        ++c.fp;
        ++out.tally.fp;
      }
    }
    for (const auto& l : gold) {
      if (!pred.contains(l)) {
        ++out.tally.per_class[key(l)].fn;
        ++out.tally.fn;
      }
    }
  }
  const long denom = 2 * out.tally.tp + out.tally.fp + out.tally.fn;
  out.f1 = denom == 0 ? 1.0 : static_cast<double>(2 * out.tally.tp) / static_cast<double>(denom);
  return out;
}

MicroF1 micro_f1(const std::vector<std::pair<ModalitySet, ModalitySet>>& pairs);

/// Cohen's kappa between two equal-length categorical labelings.
/// Throws InvalidInput on length mismatch or empty input.
double cohens_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Primary label of a set for single-label comparisons (∅ → "None").
std::string primary_label(ModalitySet set);

struct AnnotationVerdict {
  std::string note_id;
  int prompt_id = 0;
  bool started_correct = false;
  bool stopped_correct = false;
  bool reason_accurate = false;
  bool hallucination = false;
  std::string comment;
  bool operator==(const AnnotationVerdict&) const = default;
};

struct AnnotationSummary {
  std::optional<double> accuracy;            // nullopt when n == 0
  std::optional<double> hallucination_rate;  // nullopt when n == 0
  std::size_t n = 0;
};

AnnotationSummary annotation_summary(const std::vector<AnnotationVerdict>& verdicts);

}  // namespace switchminer::metrics
