#include "switchminer/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "switchminer/hashing.hpp"
#include "switchminer/random.hpp"
#include "switchminer/tokenizer.hpp"

namespace switchminer::corpus {

namespace {

const std::vector<std::string>& distractor_sentences() {
  static const std::vector<std::string> kSentences = {
      "Vital signs were reviewed and are within normal limits.",
      "Blood pressure today was recorded at 118 over 76.",
      "She denies headaches, vision changes, or chest discomfort.",
      "Screening for sexually transmitted infections was offered and accepted.",
      "Cervical cancer screening is up to date per chart review.",
      "There is no personal history of blood clots or stroke.",
      "She does not smoke and drinks alcohol only socially.",
      "Medication list and allergies were reviewed with the patient.",
      "Family history was reviewed and is noncontributory today.",
      "Body mass index is stable compared with the last visit.",
      "Abdominal exam was soft and nontender without masses.",
      "All questions were answered and she verbalized understanding.",
      "Return to clinic in twelve months or sooner if needed.",
      "She works full time and lives with her partner.",
      "Urine pregnancy test in clinic today was negative.",
      "Counseling was provided regarding folic acid supplementation.",
      "She has no known drug allergies at this time.",
      "Immunizations were reviewed and the flu vaccine was offered.",
      "Thyroid function tests from last year were normal.",
      "She sleeps well and reports normal energy levels.",
      "Depression screening questionnaire was completed and negative.",
      "We discussed healthy diet and regular physical activity.",
      "Patient was accompanied by her mother for this visit.",
      "Heart and lung exam were unremarkable on auscultation.",
      "Lab results from the prior visit were reviewed together.",
  };
  return kSentences;
}

const std::vector<std::string>& excluded_order_names() {
  static const std::vector<std::string> kNames = {
      "levonorgestrel 1.5 mg tablet (emergency)", "Plan B One-Step 1.5 mg", "ulipristal acetate 30 mg (ella)",
      "Phexxi vaginal gel", "male condoms"};
  return kNames;
}

const std::vector<std::string>& unrelated_order_names() {
  static const std::vector<std::string> kNames = {"ibuprofen 600 mg", "metformin 500 mg", "ferrous sulfate 325 mg",
                                                  "sertraline 50 mg", "cetirizine 10 mg"};
  return kNames;
}

std::string_view mix_key_race(RaceEthnicity r) { return to_string(r); }

template <std::size_t N>
void check_mixture(const std::array<double, N>& w, const char* what) {
  double sum = 0.0;
  for (double x : w) {
    if (x < 0.0 || !std::isfinite(x)) throw InvalidInput(std::string(what) + " weights must be nonnegative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InvalidInput(std::string(what) + " weights must sum to 1 (got " + std::to_string(sum) + ")");
  }
}

void check_rate(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput(std::string(what) + " must lie in [0, 1]");
}

/// Largest-remainder allocation of `n` items over a mixture, shuffled.
template <typename T, std::size_t N>
std::vector<T> allocate(const std::array<double, N>& weights, const std::array<T, N>& values, int n, Rng& rng) {
  std::vector<int> counts(N);
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const double exact = weights[i] * n;
    counts[i] = static_cast<int>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - counts[i], i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[remainders[k % N].second];
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < N; ++i) out.insert(out.end(), static_cast<std::size_t>(counts[i]), values[i]);
  rng.shuffle(out);
  return out;
}

std::string pad_id(char prefix, int n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%06d", prefix, n);
  return buf;
}

struct Encounter {
  Date date;
  Modality modality;
  enum class Kind { Start, Refill, Switch } kind;
  std::optional<Modality> previous;
};

class NoteWriter {
 public:
  NoteWriter(const GeneratorConfig& config, Rng& rng) : config_(config), rng_(rng) {}

  std::string compose(std::vector<std::string> core, bool with_distractors) {
    if (!with_distractors) return join(core);
    std::vector<std::size_t> order(distractor_sentences().size());
    std::iota(order.begin(), order.end(), 0);
    rng_.shuffle(order);
    const int k = rng_.between(config_.distractors_min, config_.distractors_max);
    std::size_t used = 0;
    std::vector<std::string> before, after;
    auto take = [&] {
      const auto& s = distractor_sentences()[order[used++]];
      (rng_.bernoulli(0.5) ? before : after).push_back(s);
    };
    for (int i = 0; i < k && used < order.size(); ++i) take();
    // Keep clinical notes comfortably above the 50-token retention threshold.
    while (used < order.size() && baselines::token_count(join(assemble(core, before, after))) <= 55) take();
    return join(assemble(core, before, after));
  }

 private:
  static std::vector<std::string> assemble(const std::vector<std::string>& core, const std::vector<std::string>& before,
                                           const std::vector<std::string>& after) {
    std::vector<std::string> all;
    all.push_back(core.front());
    all.insert(all.end(), before.begin(), before.end());
    all.insert(all.end(), core.begin() + 1, core.end());
    all.insert(all.end(), after.begin(), after.end());
    return all;
  }

  static std::string join(const std::vector<std::string>& sentences) {
    std::string out;
    for (const auto& s : sentences) {
      if (!out.empty()) out += ' ';
      out += s;
    }
    return out;
  }

  const GeneratorConfig& config_;
  Rng& rng_;
};

}  // namespace

const std::vector<ReasonFamily>& builtin_reason_families() {
  static const std::vector<ReasonFamily> kFamilies = {
      {1, "spotting and irregular bleeding",
       {"persistent spotting between periods", "irregular bleeding for the past three months",
        "bothersome breakthrough spotting", "prolonged irregular bleeding since the last visit"},
       std::nullopt},
      {2, "desire to switch methods",
       {"she would like to try a different method", "a desire for a longer acting method",
        "she prefers a method with less maintenance", "wanting to change methods after counseling"},
       std::nullopt},
      {3, "forgetting daily pills",
       {"she frequently forgets to take her daily pills", "difficulty remembering a daily dose",
        "several missed doses this month"},
       Modality::Oral},
      {4, "irritation and rash",
       {"local irritation and rash", "itching and skin irritation", "ongoing irritation and discomfort at the site"},
       std::nullopt},
      {5, "IUD malposition and removal",
       {"the device was malpositioned on ultrasound", "partial expulsion of the device requiring removal",
        "strings not visualized and removal requested"},
       Modality::IUD},
      {6, "weight gain and mood changes",
       {"weight gain and mood changes", "worsening mood swings and weight gain", "low mood and unwanted weight gain"},
       std::nullopt},
      {7, "irregular menses and pain",
       {"painful cramping and irregular menses", "worsening pelvic pain with menses",
        "heavy painful menstrual cycles"},
       std::nullopt},
      {8, "insurance coverage",
       {"insurance no longer covers her prescription", "high cost without insurance coverage",
        "insurance denied coverage for her method"},
       std::nullopt},
      {9, "implant removal",
       {"the rod is nearing expiration and she requests removal", "arm discomfort at the insertion site",
        "she requests removal of the rod"},
       Modality::Implant},
  };
  return kFamilies;
}

const std::vector<DrugName>& builtin_drug_names() {
  static const std::vector<DrugName> kDrugs = {
      {Modality::Oral, "Sprintec 0.25-35 mg-mcg tablet", "Sprintec"},
      {Modality::Oral, "Junel Fe 1-20 tablet", "Junel"},
      {Modality::Oral, "norethindrone 0.35 mg tablet", "norethindrone"},
      {Modality::Oral, "Yaz 3-0.02 mg tablet", "Yaz"},
      {Modality::Oral, "levonorgestrel-ethinyl estradiol 0.15-30 mg-mcg tablet",
       "levonorgestrel-ethinyl estradiol pills"},
      {Modality::Oral, "drospirenone-ethinyl estradiol 3-0.03 mg tablet", "drospirenone-ethinyl estradiol"},
      {Modality::Implant, "Nexplanon 68 mg implant", "Nexplanon"},
      {Modality::Implant, "etonogestrel 68 mg subdermal implant", "the subdermal implant"},
      {Modality::IUD, "Mirena 52 mg intrauterine system", "Mirena"},
      {Modality::IUD, "Kyleena 19.5 mg intrauterine system", "Kyleena"},
      {Modality::IUD, "Paragard T 380A copper IUD", "Paragard"},
      {Modality::IUD, "Liletta 52 mg intrauterine device", "Liletta"},
      {Modality::IUD, "Skyla 13.5 mg intrauterine system", "Skyla"},
      {Modality::Injection, "Depo-Provera 150 mg/mL intramuscular injection", "Depo-Provera"},
      {Modality::Injection, "medroxyprogesterone 150 mg/mL injection", "medroxyprogesterone injections"},
      {Modality::Injection, "Depo-SubQ Provera 104 mg/0.65 mL injection", "Depo-SubQ Provera"},
      {Modality::Transdermal, "Xulane 150-35 mcg/24 hr transdermal patch", "Xulane"},
      {Modality::Transdermal, "Twirla 120-30 mcg/24 hr transdermal system", "Twirla"},
      {Modality::Transdermal, "norelgestromin-ethinyl estradiol transdermal patch", "the patch"},
      {Modality::Intravaginal, "NuvaRing 0.12-0.015 mg/24 hr vaginal ring", "NuvaRing"},
      {Modality::Intravaginal, "Annovera 0.013-0.15 mg/24 hr vaginal system", "Annovera"},
      {Modality::Intravaginal, "EluRyng 0.12-0.015 mg/24 hr vaginal ring", "EluRyng"},
  };
  return kDrugs;
}

const std::vector<std::string>& fabricated_reasons() {
  static const std::vector<std::string> kFabricated = {
      "due to a recent latex allergy diagnosis",
      "because her employer relocated overseas",
      "after a hiking injury required surgery",
      "following a dermatology referral for eczema",
      "since her dentist recommended a change",
      "because of migraines triggered by aviation travel",
  };
  return kFabricated;
}

void GeneratorConfig::validate() const {
  if (n_patients < 1) throw InvalidInput("n_patients must be at least 1");
  check_rate(switch_rate, "switch_rate");
  check_rate(second_switch_rate, "second_switch_rate");
  check_mixture(race_weights, "race_ethnicity");
  check_mixture(language_weights, "preferred_language");
  check_mixture(first_modality_weights, "first_modality");
  for (double p : {p_refill_short_note, p_noise_missing_note, p_noise_missing_date, p_noise_duplicate,
                   p_noise_excluded, p_noise_unrelated, p_lost_to_followup}) {
    check_rate(p, "noise rate");
  }
  if (distractors_min < 0 || distractors_max < distractors_min) throw InvalidInput("bad distractor range");
  for (const auto& f : reasons) {
    if (f.phrases.empty()) throw InvalidInput("reason family '" + f.name + "' has no phrases");
  }
  for (const auto& [race, by_topic] : topic_multipliers) {
    for (const auto& [topic, m] : by_topic) {
      if (!(m >= 0.0)) throw InvalidInput("topic multipliers must be nonnegative");
    }
  }
}

namespace {

template <typename E, std::size_t N, typename Name>
std::array<double, N> read_mixture(const Json& j, const std::array<E, N>& values, Name name,
                                   const std::array<double, N>& fallback) {
  if (!j.is_object()) return fallback;
  std::array<double, N> out{};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (std::size_t i = 0; i < N; ++i) {
      if (name(values[i]) == it.key()) {
        out[i] = it.value().get<double>();
        known = true;
      }
    }
    if (!known) throw InvalidInput("unknown mixture key '" + it.key() + "'");
  }
  return out;
}

template <typename E, std::size_t N, typename Name>
Json write_mixture(const std::array<double, N>& w, const std::array<E, N>& values, Name name) {
  Json j = Json::object();
  for (std::size_t i = 0; i < N; ++i) j[std::string(name(values[i]))] = w[i];
  return j;
}

}  // namespace

GeneratorConfig generator_config_from_json(const Json& j) {
  GeneratorConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("n_patients", c.n_patients);
  get("switch_rate", c.switch_rate);
  get("second_switch_rate", c.second_switch_rate);
  get("age_mean_switch", c.age_mean_switch);
  get("age_sd_switch", c.age_sd_switch);
  get("age_mean_no_switch", c.age_mean_no_switch);
  get("age_sd_no_switch", c.age_sd_no_switch);
  get("distractors_min", c.distractors_min);
  get("distractors_max", c.distractors_max);
  get("mention_stopped", c.mention_stopped);
  if (j.contains("race_weights")) {
    c.race_weights = read_mixture(j["race_weights"], kRaceEthnicities, mix_key_race, c.race_weights);
  }
  if (j.contains("language_weights")) {
    c.language_weights = read_mixture(j["language_weights"], kLanguages,
                                      [](Language l) { return to_string(l); }, c.language_weights);
  }
  if (j.contains("first_modality_weights")) {
    c.first_modality_weights = read_mixture(j["first_modality_weights"], kPrescribedModalities,
                                            [](Modality m) { return to_string(m); }, c.first_modality_weights);
  }
  if (j.contains("noise")) {
    const Json& n = j["noise"];
    auto nget = [&](const char* key, double& field) {
      if (n.contains(key)) field = n.at(key).get<double>();
    };
    nget("refill_short_note", c.p_refill_short_note);
    nget("missing_note", c.p_noise_missing_note);
    nget("missing_date", c.p_noise_missing_date);
    nget("duplicate", c.p_noise_duplicate);
    nget("excluded", c.p_noise_excluded);
    nget("unrelated", c.p_noise_unrelated);
    nget("lost_to_followup", c.p_lost_to_followup);
  }
  if (j.contains("reasons")) {
    for (const auto& r : j["reasons"]) {
      ReasonFamily f;
      f.topic = r.at("topic").get<int>();
      f.name = r.value("name", "");
      f.phrases = r.at("phrases").get<std::vector<std::string>>();
      if (r.contains("requires_stopped") && !r["requires_stopped"].is_null()) {
        auto m = parse_modality(r["requires_stopped"].get<std::string>());
        if (!m) throw InvalidInput("unknown modality in requires_stopped");
        f.requires_stopped = *m;
      }
      c.reasons.push_back(std::move(f));
    }
  }
  if (j.contains("topic_multipliers")) {
    for (auto it = j["topic_multipliers"].begin(); it != j["topic_multipliers"].end(); ++it) {
      const auto race = parse_race_ethnicity(it.key());
      for (auto t = it.value().begin(); t != it.value().end(); ++t) {
        c.topic_multipliers[race][std::stoi(t.key())] = t.value().get<double>();
      }
    }
  }
  c.validate();
  return c;
}

Json to_json(const GeneratorConfig& c) {
  Json j = {{"n_patients", c.n_patients},
            {"switch_rate", c.switch_rate},
            {"second_switch_rate", c.second_switch_rate},
            {"race_weights", write_mixture(c.race_weights, kRaceEthnicities, mix_key_race)},
            {"language_weights",
             write_mixture(c.language_weights, kLanguages, [](Language l) { return to_string(l); })},
            {"first_modality_weights", write_mixture(c.first_modality_weights, kPrescribedModalities,
                                                     [](Modality m) { return to_string(m); })},
            {"age_mean_switch", c.age_mean_switch},
            {"age_sd_switch", c.age_sd_switch},
            {"age_mean_no_switch", c.age_mean_no_switch},
            {"age_sd_no_switch", c.age_sd_no_switch},
            {"distractors_min", c.distractors_min},
            {"distractors_max", c.distractors_max},
            {"mention_stopped", c.mention_stopped},
            {"noise",
             {{"refill_short_note", c.p_refill_short_note},
              {"missing_note", c.p_noise_missing_note},
              {"missing_date", c.p_noise_missing_date},
              {"duplicate", c.p_noise_duplicate},
              {"excluded", c.p_noise_excluded},
              {"unrelated", c.p_noise_unrelated},
              {"lost_to_followup", c.p_lost_to_followup}}}};
  Json reasons = Json::array();
  for (const auto& f : c.reasons) {
    reasons.push_back({{"topic", f.topic},
                       {"name", f.name},
                       {"phrases", f.phrases},
                       {"requires_stopped",
                        f.requires_stopped ? Json(std::string(to_string(*f.requires_stopped))) : Json(nullptr)}});
  }
  j["reasons"] = reasons;
  Json mult = Json::object();
  for (const auto& [race, by_topic] : c.topic_multipliers) {
    Json inner = Json::object();
    for (const auto& [topic, m] : by_topic) inner[std::to_string(topic)] = m;
    mult[std::string(to_string(race))] = inner;
  }
  j["topic_multipliers"] = mult;
  return j;
}

Corpus generate_synthetic_corpus(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(derive_seed(seed, "synthetic-corpus"));
  const auto& families = config.reasons.empty() ? builtin_reason_families() : config.reasons;
  const auto& drugs = builtin_drug_names();

  const int n = config.n_patients;
  const int n_switchers = static_cast<int>(std::lround(config.switch_rate * n));
  std::vector<bool> switcher(static_cast<std::size_t>(n), false);
  std::fill(switcher.begin(), switcher.begin() + n_switchers, true);
  rng.shuffle(switcher);
  const auto races = allocate(config.race_weights, kRaceEthnicities, n, rng);
  const auto languages = allocate(config.language_weights, kLanguages, n, rng);

  Corpus corpus;
  corpus.gold.emplace();
  NoteWriter writer(config, rng);
  int next_order = 0;
  int next_note = 0;

  auto drug_for = [&](Modality m) -> const DrugName& {
    std::vector<const DrugName*> options;
    for (const auto& d : drugs) {
      if (d.modality == m) options.push_back(&d);
    }
    return *options[rng.below(options.size())];
  };

  for (int i = 0; i < n; ++i) {
    const bool is_switcher = switcher[static_cast<std::size_t>(i)];
    Patient patient;
    patient.patient_id = pad_id('p', i + 1);
    patient.race_ethnicity = races[static_cast<std::size_t>(i)];
    patient.preferred_language = languages[static_cast<std::size_t>(i)];

    const double age = std::clamp(is_switcher ? rng.normal(config.age_mean_switch, config.age_sd_switch)
                                              : rng.normal(config.age_mean_no_switch, config.age_sd_no_switch),
                                  15.0, 49.0);
    const Date first_date = Date(2013, 1, 1).plus_days(rng.between(0, 8 * 365));
    const int whole_years = static_cast<int>(std::floor(age));
    patient.birth_date =
        first_date.plus_days(-static_cast<int>(std::ceil(whole_years * 365.25)) - rng.between(0, 300));

    // Encounter schedule.
    std::vector<Encounter> encounters;
    Modality current = kPrescribedModalities[rng.weighted(config.first_modality_weights)];
    Date date = first_date;
    encounters.push_back({date, current, Encounter::Kind::Start, std::nullopt});
    auto advance = [&] { date = date.plus_days(rng.between(60, 420)); };
    auto refills = [&](int max_refills) {
      for (int r = rng.between(0, max_refills); r > 0; --r) {
        advance();
        encounters.push_back({date, current, Encounter::Kind::Refill, std::nullopt});
      }
    };
    Date last_encounter;
    if (is_switcher) {
      const int n_switches = rng.bernoulli(config.second_switch_rate) ? 2 : 1;
      for (int s = 0; s < n_switches; ++s) {
        refills(1);
        std::vector<Modality> others;
        for (Modality m : kPrescribedModalities) {
          if (m != current) others.push_back(m);
        }
        const Modality next = others[rng.below(others.size())];
        advance();
        encounters.push_back({date, next, Encounter::Kind::Switch, current});
        current = next;
      }
      refills(1);
      last_encounter = date.plus_days(rng.between(190, 500));
    } else if (rng.bernoulli(config.p_lost_to_followup)) {
      last_encounter = date.plus_days(rng.between(20, 150));
    } else {
      refills(2);
      last_encounter = date.plus_days(rng.between(190, 500));
    }

    std::map<Modality, const DrugName*> patient_drugs;
    auto drug = [&](Modality m) -> const DrugName& {
      auto it = patient_drugs.find(m);
      if (it == patient_drugs.end()) it = patient_drugs.emplace(m, &drug_for(m)).first;
      return *it->second;
    };

    std::vector<std::pair<Date, std::string>> encounter_notes;
    for (std::size_t e = 0; e < encounters.size(); ++e) {
      const Encounter& enc = encounters[e];
      const int age_now = age_in_years(patient.birth_date, enc.date);
      const std::string header = std::to_string(age_now) + "-year-old patient seen today for contraceptive care.";
      ClinicalNote note;
      note.note_id = pad_id('n', ++next_note);
      note.patient_id = patient.patient_id;
      note.encounter_date = enc.date;
      const DrugName& current_drug = drug(enc.modality);

      if (enc.kind == Encounter::Kind::Switch) {
        const DrugName& stopped_drug = drug(*enc.previous);
        std::vector<double> weights;
        for (const auto& f : families) {
          double w = (f.requires_stopped && *f.requires_stopped != *enc.previous) ? 0.0 : 1.0;
          if (auto r = config.topic_multipliers.find(patient.race_ethnicity); r != config.topic_multipliers.end()) {
            if (auto t = r->second.find(f.topic); t != r->second.end()) w *= t->second;
          }
          weights.push_back(w);
        }
        const ReasonFamily& family = families[rng.weighted(weights)];
        const std::string& reason = rng.pick(family.phrases);
        std::vector<std::string> core = {header};
        if (config.mention_stopped) {
          switch (rng.below(3)) {
            case 0:
              core.push_back("She was previously using " + stopped_drug.note_name + ".");
              core.push_back("Plan to start " + current_drug.note_name + " today.");
              break;
            case 1:
              core.push_back("Discontinue " + stopped_drug.note_name + " and start " + current_drug.note_name + ".");
              break;
            default:
              core.push_back("Transitioning from " + stopped_drug.note_name + " to " + current_drug.note_name + ".");
              break;
          }
        } else {
          core.push_back("Plan to start " + current_drug.note_name + " today.");
        }
        core.push_back(rng.bernoulli(0.5) ? "Reason for switching: " + reason + "."
                                          : "The main concern is " + reason + ".");
        note.text = writer.compose(std::move(core), true);

        GoldLabel g;
        g.note_id = note.note_id;
        g.started.insert(enc.modality);
        g.stopped.insert(*enc.previous);
        g.reason_text = reason;
        g.reason_topic = family.topic;
        g.started_raw = current_drug.note_name;
        g.stopped_raw = config.mention_stopped ? stopped_drug.note_name : "";
        corpus.gold->push_back(std::move(g));
      } else if (enc.kind == Encounter::Kind::Refill && rng.bernoulli(config.p_refill_short_note)) {
        note.text = "Refill request reviewed.";
      } else if (enc.kind == Encounter::Kind::Start) {
        note.text = writer.compose({header, "Starting " + current_drug.note_name + " today."}, true);
      } else {
        note.text = writer.compose({header, "She continues " + current_drug.note_name + " without concerns."}, true);
      }

      MedicationOrder order;
      order.order_id = pad_id('o', ++next_order);
      order.patient_id = patient.patient_id;
      order.encounter_date = enc.date;
      order.raw_name = current_drug.order_name;
      order.note_id = note.note_id;
      corpus.orders.push_back(order);
      encounter_notes.emplace_back(enc.date, note.note_id);
      corpus.notes.push_back(std::move(note));
    }

    // Noise records: each one is removed again by the cohort filters.
    auto random_encounter = [&]() -> const std::pair<Date, std::string>& {
      return encounter_notes[rng.below(encounter_notes.size())];
    };
    auto noise_order = [&](std::optional<Date> d, std::string name, std::optional<std::string> note_id) {
      corpus.orders.push_back({pad_id('o', ++next_order), patient.patient_id, d, std::move(name), std::move(note_id)});
    };
    if (rng.bernoulli(config.p_noise_duplicate)) {
      const std::size_t e = rng.below(encounters.size());
      noise_order(encounters[e].date, drug(encounters[e].modality).order_name, encounter_notes[e].second);
    }
    if (rng.bernoulli(config.p_noise_missing_note)) {
      const auto& [d, unused] = random_encounter();
      noise_order(d, drug(kPrescribedModalities[rng.below(6)]).order_name, std::nullopt);
    }
    if (rng.bernoulli(config.p_noise_missing_date)) {
      const auto& [unused, nid] = random_encounter();
      noise_order(std::nullopt, drug(kPrescribedModalities[rng.below(6)]).order_name, nid);
    }
    if (rng.bernoulli(config.p_noise_excluded)) {
      const auto& [d, nid] = random_encounter();
      noise_order(d, rng.pick(excluded_order_names()), nid);
    }
    if (rng.bernoulli(config.p_noise_unrelated)) {
      const auto& [d, nid] = random_encounter();
      noise_order(d, rng.pick(unrelated_order_names()), nid);
    }

    corpus.last_encounter_date[patient.patient_id] = last_encounter;
    corpus.patients.push_back(std::move(patient));
  }
  return corpus;
}

}  // namespace switchminer::corpus
