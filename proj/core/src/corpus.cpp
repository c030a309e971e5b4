#include "switchminer/corpus.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "switchminer/hashing.hpp"
#include "switchminer/tokenizer.hpp"

namespace switchminer::corpus {

namespace {

constexpr std::array<std::string_view, 7> kRaceNames = {
    "White", "BlackOrAfricanAmerican", "Latinx", "Asian", "Other", "MultiRaceEthnicity", "Missing"};
constexpr std::array<std::string_view, 7> kRaceDisplay = {
    "White", "Black or African American", "Latinx", "Asian", "Other", "Multi-Race/Ethnicity", "Missing"};
constexpr std::array<std::string_view, 4> kLanguageNames = {"English", "Spanish", "Other", "Missing"};

std::string string_field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw InvalidInput(std::string("missing string field '") + key + "'");
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw InvalidInput(std::string("field '") + key + "' must be a string or null");
  return it->get<std::string>();
}

Date date_field(const Json& j, const char* key) {
  auto d = Date::parse(string_field(j, key));
  if (!d) throw InvalidInput(std::string("field '") + key + "' is not a YYYY-MM-DD date");
  return *d;
}

std::optional<Date> optional_date(const Json& j, const char* key) {
  auto s = optional_string(j, key);
  if (!s || s->empty()) return std::nullopt;
  auto d = Date::parse(*s);
  if (!d) throw InvalidInput(std::string("field '") + key + "' is not a YYYY-MM-DD date");
  return d;
}

ModalitySet modality_list(const Json& j, const char* key) {
  ModalitySet out;
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return out;
  if (!it->is_array()) throw InvalidInput(std::string("field '") + key + "' must be an array");
  for (const auto& v : *it) {
    if (!v.is_string()) throw InvalidInput(std::string("field '") + key + "' must hold modality names");
    auto m = parse_modality(v.get<std::string>());
    if (!m || *m == Modality::None) throw InvalidInput("unknown modality '" + v.get<std::string>() + "'");
    out.insert(*m);
  }
  return out;
}

template <typename T, typename Parse>
std::vector<T> load_records(const std::filesystem::path& path, std::vector<MalformedLine>& malformed, Parse parse) {
  std::vector<T> out;
  for (auto& rec : read_jsonl_numbered(path, &malformed)) {
    try {
      out.push_back(parse(rec.value));
    } catch (const InvalidInput& e) {
      malformed.push_back({path, rec.line_number, e.what()});
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(RaceEthnicity r) { return kRaceNames[static_cast<std::size_t>(r)]; }
std::string_view display_name(RaceEthnicity r) { return kRaceDisplay[static_cast<std::size_t>(r)]; }
std::string_view to_string(Language l) { return kLanguageNames[static_cast<std::size_t>(l)]; }

RaceEthnicity parse_race_ethnicity(std::string_view name) {
  for (std::size_t i = 0; i < kRaceNames.size(); ++i) {
    if (kRaceNames[i] == name || kRaceDisplay[i] == name) return static_cast<RaceEthnicity>(i);
  }
  return RaceEthnicity::Missing;
}

Language parse_language(std::string_view name) {
  for (std::size_t i = 0; i < kLanguageNames.size(); ++i) {
    if (kLanguageNames[i] == name) return static_cast<Language>(i);
  }
  return Language::Missing;
}

std::size_t ClinicalNote::token_count() const { return baselines::token_count(text); }

const Patient* Corpus::find_patient(std::string_view id) const {
  for (const auto& p : patients) {
    if (p.patient_id == id) return &p;
  }
  return nullptr;
}

const ClinicalNote* Corpus::find_note(std::string_view id) const {
  for (const auto& n : notes) {
    if (n.note_id == id) return &n;
  }
  return nullptr;
}

const GoldLabel* Corpus::find_gold(std::string_view note_id) const {
  if (!gold) return nullptr;
  for (const auto& g : *gold) {
    if (g.note_id == note_id) return &g;
  }
  return nullptr;
}

namespace {
std::string describe(const std::vector<Finding>& findings) {
  std::string msg = "corpus validation failed:";
  std::size_t shown = 0;
  for (const auto& f : findings) {
    if (f.severity != Severity::Error) continue;
    if (shown++ == 10) {
      msg += " ...";
      break;
    }
    msg += " [" + f.rule + ": " + f.record_id + (f.detail.empty() ? "" : " " + f.detail) + "]";
  }
  return msg;
}
}  // namespace

ValidationError::ValidationError(std::vector<Finding> findings)
    : Error(describe(findings)), findings_(std::move(findings)) {}

std::vector<Finding> validate_corpus(const Corpus& corpus) {
  std::vector<Finding> findings;
  auto add = [&](std::string id, std::string rule, Severity s, std::string detail = {}) {
    findings.push_back({std::move(id), std::move(rule), s, std::move(detail)});
  };

  std::unordered_set<std::string> patient_ids;
  for (const auto& p : corpus.patients) {
    if (!patient_ids.insert(p.patient_id).second) add(p.patient_id, "unique_patient_id", Severity::Error);
  }
  std::unordered_map<std::string, const ClinicalNote*> notes;
  for (const auto& n : corpus.notes) {
    if (!notes.emplace(n.note_id, &n).second) add(n.note_id, "unique_note_id", Severity::Error);
    if (!patient_ids.contains(n.patient_id)) {
      add(n.note_id, "note_patient_ref", Severity::Error, "patient " + n.patient_id);
    }
    if (n.text.empty()) add(n.note_id, "empty_note_text", Severity::Warning);
  }

  std::unordered_set<std::string> order_ids;
  std::map<std::string, Date> latest_order;
  for (const auto& o : corpus.orders) {
    if (!order_ids.insert(o.order_id).second) add(o.order_id, "unique_order_id", Severity::Error);
    if (!patient_ids.contains(o.patient_id)) {
      add(o.order_id, "order_patient_ref", Severity::Error, "patient " + o.patient_id);
    }
    if (o.note_id) {
      auto it = notes.find(*o.note_id);
      if (it == notes.end()) {
        add(*o.note_id, "order_note_ref", Severity::Error, "referenced by order " + o.order_id);
      } else if (it->second->patient_id != o.patient_id) {
        add(o.order_id, "order_note_patient_mismatch", Severity::Error, "note " + *o.note_id);
      }
    }
    if (!o.encounter_date) {
      add(o.order_id, "missing_start_date", Severity::Warning);
    } else {
      auto [it, inserted] = latest_order.emplace(o.patient_id, *o.encounter_date);
      if (!inserted) it->second = std::max(it->second, *o.encounter_date);
    }
  }

  for (const auto& p : corpus.patients) {
    auto last = corpus.last_encounter_date.find(p.patient_id);
    if (last == corpus.last_encounter_date.end()) {
      add(p.patient_id, "missing_last_encounter", Severity::Error);
      continue;
    }
    auto latest = latest_order.find(p.patient_id);
    if (latest != latest_order.end() && last->second < latest->second) {
      add(p.patient_id, "last_encounter_before_order", Severity::Error,
          last->second.to_string() + " < " + latest->second.to_string());
    }
  }

  if (corpus.gold) {
    std::unordered_set<std::string> gold_ids;
    for (const auto& g : *corpus.gold) {
      if (!notes.contains(g.note_id)) add(g.note_id, "gold_note_ref", Severity::Error);
      if (!gold_ids.insert(g.note_id).second) add(g.note_id, "unique_gold_note", Severity::Error);
    }
  }
  return findings;
}

Json to_json(const Patient& p, const Corpus& corpus) {
  Json j = {{"patient_id", p.patient_id},
            {"birth_date", p.birth_date.to_string()},
            {"race_ethnicity", std::string(to_string(p.race_ethnicity))},
            {"preferred_language", std::string(to_string(p.preferred_language))}};
  auto it = corpus.last_encounter_date.find(p.patient_id);
  j["last_encounter_date"] = it == corpus.last_encounter_date.end() ? Json(nullptr) : Json(it->second.to_string());
  return j;
}

Json to_json(const MedicationOrder& o) {
  return {{"order_id", o.order_id},
          {"patient_id", o.patient_id},
          {"encounter_date", o.encounter_date ? Json(o.encounter_date->to_string()) : Json(nullptr)},
          {"raw_name", o.raw_name},
          {"note_id", o.note_id ? Json(*o.note_id) : Json(nullptr)}};
}

Json to_json(const ClinicalNote& n) {
  return {{"note_id", n.note_id},
          {"patient_id", n.patient_id},
          {"encounter_date", n.encounter_date.to_string()},
          {"text", n.text}};
}

Json to_json(const GoldLabel& g) {
  return {{"note_id", g.note_id},
          {"started", modality_names(g.started)},
          {"stopped", modality_names(g.stopped)},
          {"reason_text", g.reason_text},
          {"reason_topic", g.reason_topic ? Json(*g.reason_topic) : Json(nullptr)},
          {"started_raw", g.started_raw},
          {"stopped_raw", g.stopped_raw}};
}

GoldLabel gold_from_json(const Json& j) {
  GoldLabel g;
  g.note_id = string_field(j, "note_id");
  g.started = modality_list(j, "started");
  g.stopped = modality_list(j, "stopped");
  g.reason_text = optional_string(j, "reason_text").value_or("");
  if (auto it = j.find("reason_topic"); it != j.end() && it->is_number_integer()) g.reason_topic = it->get<int>();
  g.started_raw = optional_string(j, "started_raw").value_or("");
  g.stopped_raw = optional_string(j, "stopped_raw").value_or("");
  return g;
}

LoadResult load_corpus(const std::filesystem::path& dir, std::string_view schema_version) {
  if (schema_version != kSchemaVersion) {
    throw InvalidInput("unknown corpus schema_version '" + std::string(schema_version) + "'");
  }
  if (auto meta = dir / "corpus.json"; std::filesystem::exists(meta)) {
    Json j = Json::parse(read_text_file(meta), nullptr, false);
    if (j.is_discarded() || !j.contains("schema_version") || j["schema_version"] != std::string(schema_version)) {
      throw InvalidInput("corpus.json declares an unsupported schema_version");
    }
  }
  for (const char* required : {"patients.jsonl", "orders.jsonl", "notes.jsonl"}) {
    if (!std::filesystem::exists(dir / required)) throw IoError("missing corpus file " + (dir / required).string());
  }

  LoadResult result;
  Corpus& c = result.corpus;
  std::map<std::string, std::optional<Date>> declared_last;
  c.patients = load_records<Patient>(dir / "patients.jsonl", result.malformed, [&](const Json& j) {
    Patient p;
    p.patient_id = string_field(j, "patient_id");
    p.birth_date = date_field(j, "birth_date");
    p.race_ethnicity = parse_race_ethnicity(optional_string(j, "race_ethnicity").value_or("Missing"));
    p.preferred_language = parse_language(optional_string(j, "preferred_language").value_or("Missing"));
    declared_last[p.patient_id] = optional_date(j, "last_encounter_date");
    return p;
  });
  c.orders = load_records<MedicationOrder>(dir / "orders.jsonl", result.malformed, [](const Json& j) {
    MedicationOrder o;
    o.order_id = string_field(j, "order_id");
    o.patient_id = string_field(j, "patient_id");
    o.encounter_date = optional_date(j, "encounter_date");
    o.raw_name = string_field(j, "raw_name");
    o.note_id = optional_string(j, "note_id");
    return o;
  });
  c.notes = load_records<ClinicalNote>(dir / "notes.jsonl", result.malformed, [](const Json& j) {
    ClinicalNote n;
    n.note_id = string_field(j, "note_id");
    n.patient_id = string_field(j, "patient_id");
    n.encounter_date = date_field(j, "encounter_date");
    n.text = string_field(j, "text");
    return n;
  });
  if (std::filesystem::exists(dir / "gold.jsonl")) {
    c.gold = load_records<GoldLabel>(dir / "gold.jsonl", result.malformed, gold_from_json);
  }

  // Patients without a declared last encounter fall back to their latest dated record.
  for (const auto& p : c.patients) {
    if (auto d = declared_last[p.patient_id]) c.last_encounter_date[p.patient_id] = *d;
  }
  auto bump = [&](const std::string& pid, Date d) {
    if (declared_last.contains(pid) && declared_last[pid]) return;
    auto [it, inserted] = c.last_encounter_date.emplace(pid, d);
    if (!inserted) it->second = std::max(it->second, d);
  };
  for (const auto& o : c.orders) {
    if (o.encounter_date && declared_last.contains(o.patient_id)) bump(o.patient_id, *o.encounter_date);
  }
  for (const auto& n : c.notes) {
    if (declared_last.contains(n.patient_id)) bump(n.patient_id, n.encounter_date);
  }
  for (const auto& p : c.patients) {
    if (!c.last_encounter_date.contains(p.patient_id)) c.last_encounter_date[p.patient_id] = p.birth_date;
  }

  auto findings = validate_corpus(c);
  if (std::any_of(findings.begin(), findings.end(), [](const Finding& f) { return f.severity == Severity::Error; })) {
    throw ValidationError(std::move(findings));
  }
  return result;
}

namespace {
std::string serialize_lines(const std::vector<Json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += dump_json(r);
    out += '\n';
  }
  return out;
}

struct Serialized {
  std::string patients, orders, notes, gold;
};

Serialized serialize(const Corpus& c) {
  std::vector<Json> p, o, n, g;
  for (const auto& x : c.patients) p.push_back(to_json(x, c));
  for (const auto& x : c.orders) o.push_back(to_json(x));
  for (const auto& x : c.notes) n.push_back(to_json(x));
  if (c.gold) {
    for (const auto& x : *c.gold) g.push_back(to_json(x));
  }
  return {serialize_lines(p), serialize_lines(o), serialize_lines(n), serialize_lines(g)};
}
}  // namespace

void write_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
  std::filesystem::create_directories(dir);
  const Serialized s = serialize(corpus);
  write_text_file(dir / "corpus.json", dump_json(Json{{"schema_version", std::string(kSchemaVersion)}}) + "\n");
  write_text_file(dir / "patients.jsonl", s.patients);
  write_text_file(dir / "orders.jsonl", s.orders);
  write_text_file(dir / "notes.jsonl", s.notes);
  if (corpus.gold) {
    write_text_file(dir / "gold.jsonl", s.gold);
  } else {
    std::filesystem::remove(dir / "gold.jsonl");
  }
}

std::string corpus_hash(const Corpus& corpus) {
  const Serialized s = serialize(corpus);
  return sha256_hex(s.patients + '\x1e' + s.orders + '\x1e' + s.notes + '\x1e' + (corpus.gold ? s.gold : "-"));
}

}  // namespace switchminer::corpus
