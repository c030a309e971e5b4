#include "switchminer/learning_curve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <unordered_map>

#include "switchminer/error.hpp"
#include "switchminer/forest.hpp"
#include "switchminer/hashing.hpp"
#include "switchminer/metrics.hpp"
#include "switchminer/random.hpp"
#include "switchminer/stats.hpp"

namespace switchminer::baselines {

std::string_view to_string(ModelKind m) { return m == ModelKind::Logreg ? "logreg" : "random_forest"; }
std::string_view to_string(Task t) { return t == Task::Started ? "started" : "stopped"; }

std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "logreg") return ModelKind::Logreg;
  if (s == "random_forest") return ModelKind::RandomForest;
  return std::nullopt;
}

std::vector<SilverLabel> silver_labels(const std::vector<switching::SwitchEvent>& events) {
  std::vector<SilverLabel> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back({e.note_id, e.started.primary(), e.stopped.primary()});
  return out;
}

std::vector<LabeledNote> labeled_notes(const corpus::Corpus& corpus, const std::vector<switching::SwitchEvent>& events,
                                       const std::set<std::string>& excluded_patients) {
  std::unordered_map<std::string, const corpus::ClinicalNote*> notes;
  for (const auto& n : corpus.notes) notes.emplace(n.note_id, &n);
  std::vector<LabeledNote> out;
  for (const auto& e : events) {
    if (excluded_patients.contains(e.patient_id)) continue;
    auto it = notes.find(e.note_id);
    if (it == notes.end()) continue;
    out.push_back({e.note_id, e.patient_id, it->second->text, e.started.primary(), e.stopped.primary()});
  }
  return out;
}

PatientSplit split_patients(std::vector<std::string> patient_ids, std::uint64_t seed, int repeat) {
  std::sort(patient_ids.begin(), patient_ids.end());
  patient_ids.erase(std::unique(patient_ids.begin(), patient_ids.end()), patient_ids.end());
  Rng rng(derive_seed(seed, "baseline-split#" + std::to_string(repeat)));
  rng.shuffle(patient_ids);
  const auto n = patient_ids.size();
  const auto n_train = static_cast<std::size_t>(std::lround(0.7 * static_cast<double>(n)));
  const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::lround(0.1 * static_cast<double>(n))));
  PatientSplit s;
  s.train.assign(patient_ids.begin(), patient_ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.validation.assign(patient_ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                      patient_ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(patient_ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), patient_ids.end());
  return s;
}

double score_single_label(const std::vector<Modality>& gold, const std::vector<std::string>& predicted) {
  std::vector<std::pair<ModalitySet, ModalitySet>> pairs;
  pairs.reserve(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ModalitySet g, p;
    g.insert(gold[i]);
    if (auto m = parse_modality(predicted[i])) p.insert(*m);
    pairs.emplace_back(g, p);
  }
  return metrics::micro_f1(pairs).f1;
}

namespace {

Modality label_of(const LabeledNote& n, Task t) { return t == Task::Started ? n.started : n.stopped; }

}  // namespace

std::optional<double> fit_and_score(const std::vector<LabeledNote>& train, const std::vector<LabeledNote>& test,
                                    Task task, ModelKind model, Scheme scheme, const Hyperparameters& h,
                                    const LearningCurveOptions& options, std::uint64_t model_seed) {
  std::vector<std::string> train_docs, train_labels, test_docs;
  std::vector<Modality> test_gold;
  std::set<std::string> classes;
  for (const auto& n : train) {
    train_docs.push_back(n.text);
    train_labels.emplace_back(to_string(label_of(n, task)));
    classes.insert(train_labels.back());
  }
  if (classes.size() < 2 || test.empty()) return std::nullopt;
  for (const auto& n : test) {
    test_docs.push_back(n.text);
    test_gold.push_back(label_of(n, task));
  }
  Vocabulary vocabulary;
  try {
    vocabulary = build_vocabulary(train_docs, options.min_df);
  } catch (const InvalidInput&) {
    return std::nullopt;
  }
  const FeatureMatrix x_train = transform(vocabulary, train_docs, scheme);
  const FeatureMatrix x_test = transform(vocabulary, test_docs, scheme);
  std::vector<std::string> predicted;
  if (model == ModelKind::Logreg) {
    predicted = train_logreg(x_train, train_labels, h.C, options.logreg).predict(x_test);
  } else {
    predicted = train_random_forest(x_train, train_labels, {h.n_estimators, h.max_depth, model_seed}).predict(x_test);
  }
  return score_single_label(test_gold, predicted);
}

LearningCurveResult evaluate_learning_curve(const std::vector<LabeledNote>& notes, const LearningCurveOptions& options) {
  if (notes.size() < 50) {
    throw InvalidInput("learning curve needs at least 50 labeled notes, got " + std::to_string(notes.size()));
  }
  if (options.repeats < 1) throw InvalidInput("learning curve needs at least one repeat");
  for (double f : options.fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw InvalidInput("learning-curve fractions must lie in (0, 1]");
  }
  std::vector<std::string> patients;
  for (const auto& n : notes) patients.push_back(n.patient_id);

  LearningCurveResult result;
  // cell key: (task, model, scheme, fraction index)
  std::map<std::tuple<int, int, int, std::size_t>, std::vector<double>> scores;

  for (int r = 0; r < options.repeats; ++r) {
    PatientSplit split = split_patients(patients, options.seed, r);
    const std::set<std::string> train_ids(split.train.begin(), split.train.end());
    const std::set<std::string> val_ids(split.validation.begin(), split.validation.end());
    std::vector<LabeledNote> train, validation, test;
    for (const auto& n : notes) {
      if (train_ids.contains(n.patient_id)) {
        train.push_back(n);
      } else if (val_ids.contains(n.patient_id)) {
        validation.push_back(n);
      } else {
        test.push_back(n);
      }
    }
    // Nested subsamples: each smaller fraction is a prefix of the same permutation.
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(options.seed, "subsample#" + std::to_string(r)));
    rng.shuffle(order);
    const std::uint64_t model_seed = derive_seed(options.seed, "forest#" + std::to_string(r));

    for (Task task : options.tasks) {
      for (ModelKind model : options.models) {
        for (Scheme scheme : options.schemes) {
          // Grid search on validation; candidates in ascending order, replaced
          // only on a strictly better score.
          std::vector<Hyperparameters> candidates;
          if (model == ModelKind::Logreg) {
            auto cs = options.grid.C;
            std::sort(cs.begin(), cs.end());
            for (double c : cs) candidates.push_back({c, 0, 0});
          } else {
            auto ns = options.grid.n_estimators;
            auto ds = options.grid.max_depth;
            std::sort(ns.begin(), ns.end());
            std::sort(ds.begin(), ds.end());
            for (int ne : ns) {
              for (int d : ds) candidates.push_back({0.0, ne, d});
            }
          }
          if (candidates.empty()) throw InvalidInput("empty hyperparameter grid for " + std::string(to_string(model)));
          std::optional<Hyperparameters> best;
          double best_f1 = -1.0;
          if (candidates.size() == 1 || validation.empty()) {
            best = candidates.front();
          } else {
            for (const auto& h : candidates) {
              const auto f1 = fit_and_score(train, validation, task, model, scheme, h, options, model_seed);
              if (f1 && *f1 > best_f1) {
                best_f1 = *f1;
                best = h;
              }
            }
          }
          if (!best) continue;
          result.selections.push_back({r, task, model, scheme, *best, best_f1});

          for (std::size_t fi = 0; fi < options.fractions.size(); ++fi) {
            const double f = options.fractions[fi];
            const std::size_t k = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::lround(f * static_cast<double>(train.size()))));
            std::vector<LabeledNote> subsample;
            for (std::size_t i = 0; i < std::min(k, order.size()); ++i) subsample.push_back(train[order[i]]);
            const auto f1 = fit_and_score(subsample, test, task, model, scheme, *best, options, model_seed);
            if (f1) scores[{static_cast<int>(task), static_cast<int>(model), static_cast<int>(scheme), fi}].push_back(*f1);
          }
        }
      }
    }
    result.splits.push_back(std::move(split));
  }

  for (Task task : options.tasks) {
    for (ModelKind model : options.models) {
      for (Scheme scheme : options.schemes) {
        for (std::size_t fi = 0; fi < options.fractions.size(); ++fi) {
          LearningCurveCell cell;
          cell.task = task;
          cell.model = model;
          cell.scheme = scheme;
          cell.fraction = options.fractions[fi];
          auto it = scores.find({static_cast<int>(task), static_cast<int>(model), static_cast<int>(scheme), fi});
          if (it != scores.end()) cell.scores = it->second;
          cell.n_repeats = static_cast<int>(cell.scores.size());
          if (!cell.scores.empty()) {
            const auto s = stats::summarize(cell.scores);
            cell.mean_f1 = s.mean;
            cell.sd_f1 = cell.scores.size() > 1 ? s.sd : 0.0;
          }
          result.cells.push_back(std::move(cell));
        }
      }
    }
  }
  return result;
}

std::string render_learning_curve_table(const std::vector<LearningCurveCell>& cells) {
  std::ostringstream out;
  out << "task\tmodel\tscheme\tfraction\tmean_f1\tsd_f1\tn_repeats\n";
  char buf[32];
  auto num = [&](std::optional<double> v) -> std::string {
    if (!v) return "NA";
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
  };
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof buf, "%g", c.fraction);
    out << to_string(c.task) << '\t' << to_string(c.model) << '\t' << to_string(c.scheme) << '\t' << buf << '\t';
    out << num(c.mean_f1) << '\t' << num(c.sd_f1) << '\t' << c.n_repeats << '\n';
  }
  return out.str();
}

}  // namespace switchminer::baselines
