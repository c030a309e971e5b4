#include "switchminer/metrics.hpp"

#include "switchminer/error.hpp"

namespace switchminer::metrics {

MicroF1 micro_f1(const std::vector<std::pair<ModalitySet, ModalitySet>>& pairs) {
  std::vector<std::pair<std::set<Modality>, std::set<Modality>>> converted;
  converted.reserve(pairs.size());
  for (const auto& [gold, pred] : pairs) {
    auto g = gold.members();
    auto p = pred.members();
    converted.emplace_back(std::set<Modality>(g.begin(), g.end()), std::set<Modality>(p.begin(), p.end()));
  }
  return micro_f1(converted);
}

double cohens_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.size() != b.size()) throw InvalidInput("cohens_kappa: label lists differ in length");
  if (a.empty()) throw InvalidInput("cohens_kappa: empty label lists");
  const double n = static_cast<double>(a.size());
  std::map<std::string, double> freq_a, freq_b;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    freq_a[a[i]] += 1.0;
    freq_b[b[i]] += 1.0;
    if (a[i] == b[i]) agree += 1.0;
  }
  const double p_o = agree / n;
  double p_e = 0.0;
  for (const auto& [label, count] : freq_a) {
    if (auto it = freq_b.find(label); it != freq_b.end()) p_e += (count / n) * (it->second / n);
  }
  if (p_e == 1.0) return 1.0;  // both raters used one identical label throughout
  return (p_o - p_e) / (1.0 - p_e);
}

std::string primary_label(ModalitySet set) { return std::string(to_string(set.primary())); }

AnnotationSummary annotation_summary(const std::vector<AnnotationVerdict>& verdicts) {
  AnnotationSummary s;
  s.n = verdicts.size();
  if (s.n == 0) return s;
  double accurate = 0.0, hallucinated = 0.0;
  for (const auto& v : verdicts) {
    accurate += v.reason_accurate ? 1.0 : 0.0;
    hallucinated += v.hallucination ? 1.0 : 0.0;
  }
  s.accuracy = accurate / static_cast<double>(s.n);
  s.hallucination_rate = hallucinated / static_cast<double>(s.n);
  return s;
}

}  // namespace switchminer::metrics
