#include "switchminer/switching.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace switchminer::switching {

using corpus::Corpus;
using corpus::MedicationOrder;

FilteredCohort filter_orders(const Corpus& corpus, const ModalityLexicon& lexicon, const FilterOptions& options) {
  FilteredCohort out;
  FilterReport& report = out.report;
  report.input_orders = static_cast<int>(corpus.orders.size());

  std::unordered_map<std::string, std::size_t> note_tokens;
  for (const auto& n : corpus.notes) note_tokens.emplace(n.note_id, n.token_count());

  // Stage 1: per-order drops, then dedup of (patient, date, modality).
  struct Kept {
    const MedicationOrder* order;
    Modality modality;
  };
  std::map<std::string, std::vector<Kept>> per_patient;
  std::set<std::tuple<std::string, Date, Modality>> seen;
  std::unordered_map<std::string, MatchResult> match_cache;
  for (const auto& o : corpus.orders) {
    if (!o.encounter_date) {
      ++report.missing_start_date;
      continue;
    }
    if (!o.note_id || !note_tokens.contains(*o.note_id)) {
      ++report.missing_note;
      continue;
    }
    auto cached = match_cache.find(o.raw_name);
    if (cached == match_cache.end()) cached = match_cache.emplace(o.raw_name, lexicon.map(o.raw_name)).first;
    const MatchResult match = cached->second;
    if (match.kind == MatchKind::Excluded) {
      ++report.excluded;
      continue;
    }
    if (match.kind == MatchKind::Unmatched) {
      ++report.unmatched;
      continue;
    }
    if (note_tokens[*o.note_id] <= options.min_tokens) {
      ++report.short_note;
      continue;
    }
    if (!seen.emplace(o.patient_id, *o.encounter_date, match.modality).second) {
      ++report.duplicates;
      continue;
    }
    per_patient[o.patient_id].push_back({&o, match.modality});
  }

  // Stage 2: follow-up requirement relative to the first retained order.
  for (auto& [pid, kept] : per_patient) {
    std::stable_sort(kept.begin(), kept.end(),
                     [](const Kept& a, const Kept& b) { return *a.order->encounter_date < *b.order->encounter_date; });
    const Date first = *kept.front().order->encounter_date;
    auto last = corpus.last_encounter_date.find(pid);
    if (last == corpus.last_encounter_date.end() || last->second - first < options.min_followup_days) {
      ++report.no_followup;
      continue;
    }
    auto& timeline = out.timelines[pid];
    for (const auto& k : kept) {
      const Date d = *k.order->encounter_date;
      if (timeline.empty() || timeline.back().date != d) timeline.push_back({d, {}, *k.order->note_id});
      timeline.back().modalities.insert(k.modality);
      out.retained_orders.push_back(*k.order);
    }
  }
  std::stable_sort(out.retained_orders.begin(), out.retained_orders.end(),
                   [](const MedicationOrder& a, const MedicationOrder& b) { return a.order_id < b.order_id; });
  report.retained_orders = static_cast<int>(out.retained_orders.size());
  report.retained_patients = static_cast<int>(out.timelines.size());
  return out;
}

Corpus restrict_to(const Corpus& corpus, const std::vector<MedicationOrder>& orders) {
  Corpus c = corpus;
  c.orders = orders;
  return c;
}

std::vector<SwitchEvent> detect_switches(const std::string& patient_id,
                                         const std::vector<TimelineEncounter>& timeline) {
  std::vector<SwitchEvent> events;
  for (std::size_t i = 1; i < timeline.size(); ++i) {
    const auto& prev = timeline[i - 1];
    const auto& curr = timeline[i];
    if (!(prev.date < curr.date)) throw std::logic_error("detect_switches: timeline for " + patient_id + " is unsorted");
    const ModalitySet started = curr.modalities.minus(prev.modalities);
    const ModalitySet stopped = prev.modalities.minus(curr.modalities);
    // Pure discontinuations are not switches.
    if (started.empty()) continue;
    events.push_back({patient_id, prev.date, curr.date, stopped, started, curr.note_id});
  }
  return events;
}

std::vector<SwitchEvent> detect_switches(const FilteredCohort& cohort) {
  std::vector<SwitchEvent> all;
  for (const auto& [pid, timeline] : cohort.timelines) {
    auto events = detect_switches(pid, timeline);
    all.insert(all.end(), events.begin(), events.end());
  }
  return all;
}

Json to_json(const SwitchEvent& e) {
  return {{"patient_id", e.patient_id},
          {"prev_encounter_date", e.prev_encounter_date.to_string()},
          {"curr_encounter_date", e.curr_encounter_date.to_string()},
          {"stopped", modality_names(e.stopped)},
          {"started", modality_names(e.started)},
          {"note_id", e.note_id}};
}

SwitchEvent switch_event_from_json(const Json& j) {
  SwitchEvent e;
  e.patient_id = j.at("patient_id").get<std::string>();
  e.prev_encounter_date = Date::parse(j.at("prev_encounter_date").get<std::string>()).value();
  e.curr_encounter_date = Date::parse(j.at("curr_encounter_date").get<std::string>()).value();
  e.stopped = modality_set_from_names(j.at("stopped").get<std::vector<std::string>>());
  e.started = modality_set_from_names(j.at("started").get<std::vector<std::string>>());
  e.note_id = j.at("note_id").get<std::string>();
  return e;
}

namespace {

std::size_t modality_index(Modality m) {
  for (std::size_t i = 0; i < kPrescribedModalities.size(); ++i) {
    if (kPrescribedModalities[i] == m) return i;
  }
  return 0;
}

template <typename Key>
std::optional<stats::TestResult> independence_test(const std::map<Key, ArmCounts>& counts) {
  std::vector<std::vector<double>> table;
  for (const auto& [key, c] : counts) {
    if (c.with_switch + c.without_switch > 0) table.push_back({double(c.with_switch), double(c.without_switch)});
  }
  try {
    return stats::chi_square_test(table);
  } catch (const InvalidInput&) {
    return std::nullopt;
  }
}

}  // namespace

CohortSummary summarize_cohort(const Corpus& corpus, const FilteredCohort& cohort,
                               const std::vector<SwitchEvent>& events) {
  CohortSummary s;
  s.total_events = static_cast<int>(events.size());
  std::set<std::string> switchers;
  for (const auto& e : events) {
    switchers.insert(e.patient_id);
    for (Modality from : e.stopped.members()) {
      for (Modality to : e.started.members()) ++s.pair_matrix[modality_index(from)][modality_index(to)];
    }
  }

  std::unordered_map<std::string, const corpus::Patient*> patients;
  for (const auto& p : corpus.patients) patients.emplace(p.patient_id, &p);

  std::vector<double> ages_switch, ages_no_switch;
  for (const auto& [pid, timeline] : cohort.timelines) {
    auto it = patients.find(pid);
    if (it == patients.end() || timeline.empty()) continue;
    const corpus::Patient& p = *it->second;
    const bool sw = switchers.contains(pid);
    auto bump = [sw](ArmCounts& c) { ++(sw ? c.with_switch : c.without_switch); };
    bump(s.by_race[p.race_ethnicity]);
    bump(s.by_language[p.preferred_language]);
    bump(s.by_first_modality[timeline.front().modalities.primary()]);
    const double age = age_in_years(p.birth_date, timeline.front().date);
    (sw ? ages_switch : ages_no_switch).push_back(age);
    ++(sw ? s.patients_with_switch : s.patients_without_switch);
  }
  const auto sa = stats::summarize(ages_switch);
  const auto sb = stats::summarize(ages_no_switch);
  s.age_switch = {sa.mean, sa.sd, sa.n};
  s.age_no_switch = {sb.mean, sb.sd, sb.n};
  if (sa.n >= 2 && sb.n >= 2) s.age_test = stats::t_test(sa, sb);

  // Missing categories are shown but left out of the significance tests.
  auto without_missing = [](auto counts, auto missing) {
    counts.erase(missing);
    return counts;
  };
  s.race_test = independence_test(without_missing(s.by_race, corpus::RaceEthnicity::Missing));
  s.language_test = independence_test(without_missing(s.by_language, corpus::Language::Missing));
  s.first_modality_test = independence_test(s.by_first_modality);
  return s;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string count_pct(int n, int total) {
  if (total == 0) return std::to_string(n);
  return std::to_string(n) + " (" + fmt("%.1f", 100.0 * n / total) + "%)";
}

std::string p_text(const std::optional<stats::TestResult>& t) {
  if (!t) return "n/a";
  if (t->p_value < 0.001) return "p<0.001";
  return "p=" + fmt("%.3f", t->p_value);
}

}  // namespace

std::string render_demographics_table(const CohortSummary& s) {
  std::ostringstream out;
  out << "variable\tcategory\tswitch (n=" << s.patients_with_switch << ")\tno switch (n=" << s.patients_without_switch
      << ")\tsignificance\n";
  out << "age\tmean (SD)\t" << fmt("%.1f", s.age_switch.mean) << " (" << fmt("%.1f", s.age_switch.sd) << ")\t"
      << fmt("%.1f", s.age_no_switch.mean) << " (" << fmt("%.1f", s.age_no_switch.sd) << ")\t" << p_text(s.age_test)
      << "\n";
  auto section = [&](const char* name, const auto& counts, auto label, auto is_missing, const auto& test) {
    int with_total = 0, without_total = 0;
    for (const auto& [k, c] : counts) {
      if (is_missing(k)) continue;
      with_total += c.with_switch;
      without_total += c.without_switch;
    }
    bool first = true;
    for (const auto& [k, c] : counts) {
      out << name << '\t' << label(k) << '\t';
      if (is_missing(k)) {
        out << c.with_switch << '\t' << c.without_switch;
      } else {
        out << count_pct(c.with_switch, with_total) << '\t' << count_pct(c.without_switch, without_total);
      }
      out << '\t' << (first ? p_text(test) : "") << '\n';
      first = false;
    }
  };
  section(
      "race_ethnicity", s.by_race, [](corpus::RaceEthnicity r) { return std::string(corpus::display_name(r)); },
      [](corpus::RaceEthnicity r) { return r == corpus::RaceEthnicity::Missing; }, s.race_test);
  section(
      "preferred_language", s.by_language, [](corpus::Language l) { return std::string(corpus::to_string(l)); },
      [](corpus::Language l) { return l == corpus::Language::Missing; }, s.language_test);
  section(
      "first_modality", s.by_first_modality, [](Modality m) { return std::string(to_string(m)); },
      [](Modality) { return false; }, s.first_modality_test);
  return out.str();
}

std::string render_pair_matrix(const CohortSummary& s) {
  std::ostringstream out;
  out << "stopped\\started";
  for (Modality m : kPrescribedModalities) out << '\t' << to_string(m);
  out << '\n';
  for (std::size_t i = 0; i < 6; ++i) {
    out << to_string(kPrescribedModalities[i]);
    for (std::size_t j = 0; j < 6; ++j) out << '\t' << s.pair_matrix[i][j];
    out << '\n';
  }
  return out.str();
}

}  // namespace switchminer::switching
