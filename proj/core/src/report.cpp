#include "switchminer/report.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "switchminer/error.hpp"
#include "switchminer/jsonl.hpp"
#include "switchminer/svg.hpp"

namespace switchminer::report {

namespace fs = std::filesystem;

namespace {

constexpr std::array<const char*, 6> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
constexpr const char* kReferenceColor = "#555555";
constexpr const char* kHeatmapStroke = "#ffffff";

// Columns of a parsed table addressed by header name.
class Table {
 public:
  explicit Table(const std::string& text) : rows_(parse_tsv(text)) {
    if (rows_.empty()) throw InvalidInput("table is empty");
    for (std::size_t i = 0; i < rows_[0].size(); ++i) columns_[rows_[0][i]] = i;
  }
  [[nodiscard]] std::size_t size() const { return rows_.size() - 1; }
  [[nodiscard]] const std::string& at(std::size_t row, const std::string& column) const {
    auto it = columns_.find(column);
    if (it == columns_.end()) throw InvalidInput("table has no column '" + column + "'");
    const auto& r = rows_[row + 1];
    if (it->second >= r.size()) throw InvalidInput("table row " + std::to_string(row + 1) + " is short");
    return r[it->second];
  }
  [[nodiscard]] std::optional<double> number(std::size_t row, const std::string& column) const {
    const auto& s = at(row, column);
    if (s == "NA" || s.empty()) return std::nullopt;
    try {
      return std::stod(s);
    } catch (const std::exception&) {
      throw InvalidInput("table value '" + s + "' in column '" + column + "' is not a number");
    }
  }

 private:
  std::vector<std::vector<std::string>> rows_;
  std::map<std::string, std::size_t> columns_;
};

// A vertical axis from 0 to 1 with gridlines every 0.2.
struct UnitAxis {
  double left, top, bottom;
  [[nodiscard]] double y(double v) const { return bottom - std::clamp(v, 0.0, 1.0) * (bottom - top); }
  void draw(SvgDocument& svg, double right, const std::string& label) const {
    for (int i = 0; i <= 5; ++i) {
      const double v = i / 5.0;
      svg.line(left, y(v), right, y(v), "#e0e0e0");
      svg.text(left - 6, y(v) + 4, fixed(v, 1), 10, "end");
    }
    svg.line(left, top, left, bottom, "#222");
    svg.line(left, bottom, right, bottom, "#222");
    svg.text(left - 38, (top + bottom) / 2, label, 11, "middle", "#222", -90);
  }
};

void reference_line(SvgDocument& svg, const UnitAxis& axis, double x1, double x2, double value,
                    const std::string& label) {
  svg.line(x1, axis.y(value), x2, axis.y(value), kReferenceColor, 1.2, "6,4");
  svg.text(x2, axis.y(value) - 4, "paper-reported " + label, 10, "end", kReferenceColor);
}

void legend(SvgDocument& svg, double x, double y, const std::vector<std::pair<std::string, std::string>>& items) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    const double yy = y + 16.0 * static_cast<double>(i);
    svg.rect(x, yy - 9, 10, 10, items[i].second);
    svg.text(x + 15, yy, items[i].first, 11);
  }
}

}  // namespace

std::vector<std::vector<std::string>> parse_tsv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      cells.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string placeholder_svg(const std::string& title, const std::string& explanation) {
  SvgDocument svg(640, 160);
  svg.title(title);
  svg.rect(20, 40, 600, 100, "#f4f4f4", "#bbbbbb");
  svg.text(320, 85, "Not available", 14, "middle", "#777777");
  svg.text(320, 110, explanation, 11, "middle", "#777777");
  return svg.str();
}

std::string prompt_scores_svg(const std::string& prompt_scores_tsv) {
  const Table t(prompt_scores_tsv);
  if (t.size() == 0) throw InvalidInput("prompt score table has no rows");
  const double group_w = 90, left = 70, top = 50, bottom = 300;
  const double width = left + group_w * static_cast<double>(t.size()) + 190;
  SvgDocument svg(width, 350);
  svg.title("Prompt micro-F1 on the dev split");
  const UnitAxis axis{left, top, bottom};
  const double right = left + group_w * static_cast<double>(t.size()) + 10;
  axis.draw(svg, right, "micro-F1");
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double x = left + 10 + group_w * static_cast<double>(i);
    const double started = t.number(i, "started_f1").value_or(0.0);
    const double stopped = t.number(i, "stopped_f1").value_or(0.0);
    svg.rect(x + 8, axis.y(started), 30, bottom - axis.y(started), kPalette[0]);
    svg.rect(x + 40, axis.y(stopped), 30, bottom - axis.y(stopped), kPalette[1]);
    svg.text(x + 23, axis.y(started) - 3, fixed(started, 3), 9, "middle");
    svg.text(x + 55, axis.y(stopped) - 3, fixed(stopped, 3), 9, "middle");
    svg.text(x + 39, bottom + 16, "prompt " + t.at(i, "prompt_id"), 11, "middle");
  }
  reference_line(svg, axis, left, right, 0.817, "low 0.817");
  reference_line(svg, axis, left, right, 0.881, "high 0.881");
  legend(svg, right + 15, top + 10, {{"started", kPalette[0]}, {"stopped", kPalette[1]}});
  return svg.str();
}

std::string extraction_scores_svg(const std::string& scores_tsv) {
  const Table t(scores_tsv);
  if (t.size() == 0) throw InvalidInput("extraction score table has no rows");
  const double left = 70, top = 50, bottom = 300, group_w = 160;
  std::vector<std::string> refs;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (std::find(refs.begin(), refs.end(), t.at(i, "reference")) == refs.end()) refs.push_back(t.at(i, "reference"));
  }
  const double right = left + 20 + group_w * 2;
  SvgDocument svg(right + 200, 350);
  svg.title("Test-set extraction micro-F1");
  const UnitAxis axis{left, top, bottom};
  axis.draw(svg, right, "micro-F1");
  const std::array<std::string, 2> fields = {"started", "stopped"};
  std::vector<std::pair<std::string, std::string>> items;
  for (std::size_t f = 0; f < fields.size(); ++f) {
    const double gx = left + 20 + group_w * static_cast<double>(f);
    for (std::size_t ri = 0; ri < refs.size(); ++ri) {
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (t.at(i, "field") != fields[f] || t.at(i, "reference") != refs[ri]) continue;
        const double x = gx + 44.0 * static_cast<double>(ri);
        if (auto v = t.number(i, "micro_f1")) {
          svg.rect(x, axis.y(*v), 36, bottom - axis.y(*v), kPalette[ri % kPalette.size()]);
          svg.text(x + 18, axis.y(*v) - 3, fixed(*v, 3), 9, "middle");
        } else {
          svg.text(x + 18, bottom - 4, "NA", 9, "middle", "#777777");
        }
      }
    }
    svg.text(gx + 22.0 * static_cast<double>(refs.size()), bottom + 16, fields[f], 11, "middle");
  }
  for (std::size_t ri = 0; ri < refs.size(); ++ri) items.emplace_back("vs " + refs[ri], kPalette[ri % kPalette.size()]);
  reference_line(svg, axis, left + 10, left + group_w, 0.828, "0.828");
  reference_line(svg, axis, left + 10 + group_w, right, 0.439, "0.439");
  legend(svg, right + 15, top + 10, items);
  return svg.str();
}

std::string learning_curve_svg(const std::string& learning_curve_tsv) {
  const Table t(learning_curve_tsv);
  if (t.size() == 0) throw InvalidInput("learning-curve table has no rows");
  std::vector<std::string> tasks, series;
  double min_fraction = 1.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& task = t.at(i, "task");
    const std::string s = t.at(i, "model") + " " + t.at(i, "scheme");
    if (std::find(tasks.begin(), tasks.end(), task) == tasks.end()) tasks.push_back(task);
    if (std::find(series.begin(), series.end(), s) == series.end()) series.push_back(s);
    min_fraction = std::min(min_fraction, t.number(i, "fraction").value_or(1.0));
  }
  const double panel_w = 340, left = 70, top = 50, bottom = 300;
  SvgDocument svg(left + panel_w * static_cast<double>(tasks.size()) + 170, 350);
  svg.title("Baseline learning curves (test micro-F1, mean over repeats)");
  // Fractions are drawn on a log axis; a single fraction sits mid-panel.
  const double lo = std::log10(std::max(min_fraction, 1e-6));
  for (std::size_t p = 0; p < tasks.size(); ++p) {
    const double x0 = left + panel_w * static_cast<double>(p);
    const double x1 = x0 + panel_w - 60;
    const UnitAxis axis{x0, top, bottom};
    axis.draw(svg, x1, p == 0 ? "micro-F1" : "");
    auto xpos = [&](double fraction) {
      if (lo >= 0.0) return (x0 + x1) / 2;
      return x0 + 10 + (std::log10(fraction) - lo) / -lo * (x1 - x0 - 20);
    };
    svg.text((x0 + x1) / 2, top - 8, "task: " + tasks[p], 12, "middle");
    svg.text((x0 + x1) / 2, bottom + 32, "training fraction (log scale)", 10, "middle");
    std::set<std::string> ticks;
    for (std::size_t si = 0; si < series.size(); ++si) {
      std::vector<std::pair<double, double>> points;
      std::vector<std::pair<double, double>> fractions;
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (t.at(i, "task") != tasks[p] || t.at(i, "model") + " " + t.at(i, "scheme") != series[si]) continue;
        const auto f = t.number(i, "fraction");
        const auto m = t.number(i, "mean_f1");
        if (f && m) fractions.emplace_back(*f, *m);
        if (f && ticks.insert(t.at(i, "fraction")).second) {
          svg.text(xpos(*f), bottom + 16, t.at(i, "fraction"), 9, "middle");
        }
      }
      std::sort(fractions.begin(), fractions.end());
      for (const auto& [f, m] : fractions) points.emplace_back(xpos(f), axis.y(m));
      const char* colour = kPalette[si % kPalette.size()];
      if (points.size() > 1) svg.polyline(points, colour);
      for (const auto& [x, y] : points) svg.circle(x, y, 3, colour);
    }
    if (tasks[p] == "started") reference_line(svg, axis, x0, x1, 0.714, "RF TF-IDF 0.714 (SD 0.024)");
    if (tasks[p] == "stopped") reference_line(svg, axis, x0, x1, 0.424, "RF TF-IDF 0.424 (SD 0.009)");
  }
  std::vector<std::pair<std::string, std::string>> items;
  for (std::size_t si = 0; si < series.size(); ++si) items.emplace_back(series[si], kPalette[si % kPalette.size()]);
  legend(svg, left + panel_w * static_cast<double>(tasks.size()) - 40, top + 10, items);
  return svg.str();
}

std::string keywords_svg(const std::string& keywords_tsv) {
  const Table t(keywords_tsv);
  if (t.size() == 0) throw InvalidInput("keyword table has no rows");
  struct Panel {
    std::string name;
    std::vector<std::pair<std::string, double>> terms;
  };
  std::vector<std::pair<int, Panel>> panels;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const int topic = std::stoi(t.at(i, "topic"));
    auto it = std::find_if(panels.begin(), panels.end(), [&](const auto& p) { return p.first == topic; });
    if (it == panels.end()) {
      panels.push_back({topic, {t.at(i, "name"), {}}});
      it = std::prev(panels.end());
    }
    if (it->second.terms.size() < 10) it->second.terms.emplace_back(t.at(i, "term"), t.number(i, "score").value_or(0));
  }
  const std::size_t per_row = 4;
  const double panel_w = 230, panel_h = 200;
  const std::size_t rows = (panels.size() + per_row - 1) / per_row;
  SvgDocument svg(panel_w * static_cast<double>(std::min(per_row, panels.size())) + 20,
                  50 + panel_h * static_cast<double>(rows));
  svg.title("Top c-TF-IDF terms per topic");
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const double x0 = 10 + panel_w * static_cast<double>(p % per_row);
    const double y0 = 45 + panel_h * static_cast<double>(p / per_row);
    const auto& [topic, panel] = panels[p];
    std::string heading = "topic " + std::to_string(topic);
    if (!panel.name.empty()) heading += ": " + panel.name;
    svg.text(x0 + 5, y0 + 12, heading, 11);
    double max_score = 0.0;
    for (const auto& [term, score] : panel.terms) max_score = std::max(max_score, score);
    for (std::size_t r = 0; r < panel.terms.size(); ++r) {
      const double y = y0 + 22 + 16.0 * static_cast<double>(r);
      const double w = max_score > 0 ? panel.terms[r].second / max_score * 110 : 0.0;
      svg.text(x0 + 95, y + 10, panel.terms[r].first, 10, "end");
      svg.rect(x0 + 100, y + 1, w, 11, kPalette[p % kPalette.size()]);
    }
  }
  return svg.str();
}

std::string enrichment_heatmap_svg(const std::string& enrichment_tsv) {
  const Table t(enrichment_tsv);
  if (t.size() == 0) throw InvalidInput("enrichment table has no rows");
  std::vector<std::string> topics, subgroups;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (std::find(topics.begin(), topics.end(), t.at(i, "topic")) == topics.end()) topics.push_back(t.at(i, "topic"));
    if (std::find(subgroups.begin(), subgroups.end(), t.at(i, "subgroup")) == subgroups.end()) {
      subgroups.push_back(t.at(i, "subgroup"));
    }
  }
  double limit = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (auto v = t.number(i, "log2_lift")) limit = std::max(limit, std::abs(*v));
  }
  if (limit == 0.0) limit = 1.0;
  const double cell_w = 90, cell_h = 30, left = 90, top = 130;
  SvgDocument svg(left + cell_w * static_cast<double>(subgroups.size()) + 130,
                  top + cell_h * static_cast<double>(topics.size()) + 40);
  svg.title("Topic enrichment by subgroup (log2 lift)");
  for (std::size_t j = 0; j < subgroups.size(); ++j) {
    const double x = left + cell_w * (static_cast<double>(j) + 0.5);
    svg.text(x, top - 8, subgroups[j], 10, "start", "#222", -40);
  }
  for (std::size_t k = 0; k < topics.size(); ++k) {
    svg.text(left - 8, top + cell_h * (static_cast<double>(k) + 0.5) + 4, "topic " + topics[k], 10, "end");
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto k = static_cast<double>(std::find(topics.begin(), topics.end(), t.at(i, "topic")) - topics.begin());
    const auto j =
        static_cast<double>(std::find(subgroups.begin(), subgroups.end(), t.at(i, "subgroup")) - subgroups.begin());
    const auto v = t.number(i, "log2_lift");
    const double x = left + cell_w * j, y = top + cell_h * k;
    svg.rect(x, y, cell_w, cell_h, v ? diverging_color(*v, limit) : "#dddddd", kHeatmapStroke);
    svg.text(x + cell_w / 2, y + cell_h / 2 + 4, v ? fixed(*v, 2) : "NA", 10, "middle");
  }
  const double lx = left + cell_w * static_cast<double>(subgroups.size()) + 20;
  for (int s = 0; s <= 10; ++s) {
    const double v = limit * (1.0 - s / 5.0);
    svg.rect(lx, top + 12.0 * s, 16, 12, diverging_color(v, limit));
  }
  svg.text(lx + 20, top + 10, "+" + fixed(limit, 2), 10);
  svg.text(lx + 20, top + 126, "-" + fixed(limit, 2), 10);
  return svg.str();
}

std::string annotation_svg(const std::string& annotation_summary_json) {
  const Json j = Json::parse(annotation_summary_json);
  auto value = [&](const char* key) -> std::optional<double> {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number()) return std::nullopt;
    return it->get<double>();
  };
  const double left = 70, top = 50, bottom = 300;
  const double right = left + 300;
  SvgDocument svg(right + 220, 350);
  const std::string source = j.value("source", "reviewer");
  svg.title("Reason accuracy and hallucination (" + source + " verdicts, n=" + std::to_string(j.value("n", 0)) + ")");
  const UnitAxis axis{left, top, bottom};
  axis.draw(svg, right, "rate");
  const std::array<std::pair<const char*, const char*>, 2> bars = {
      {{"reason_accuracy", "reason accuracy"}, {"hallucination_rate", "hallucination"}}};
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double x = left + 40 + 150.0 * static_cast<double>(i);
    if (auto v = value(bars[i].first)) {
      svg.rect(x, axis.y(*v), 70, bottom - axis.y(*v), kPalette[i]);
      svg.text(x + 35, axis.y(*v) - 3, fixed(100 * *v, 1) + "%", 10, "middle");
    } else {
      svg.text(x + 35, bottom - 4, "NA", 10, "middle", "#777777");
    }
    svg.text(x + 35, bottom + 16, bars[i].second, 11, "middle");
  }
  reference_line(svg, axis, left, left + 150, 0.914, "91.4%");
  reference_line(svg, axis, left + 150, right + 150, 0.022, "2.2%");
  return svg.str();
}

ReportResult emit_report(const fs::path& artifacts_dir) {
  const fs::path dir = artifacts_dir / "report";
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir);
  ReportResult result;
  auto write = [&](const std::string& name, const std::string& content) {
    write_text_file(dir / name, content);
    result.files.push_back("report/" + name);
  };

  struct ChartSpec {
    const char* name;
    const char* title;
    const char* artifact;
    const char* stage;
    std::function<std::string(const std::string&)> render;
  };
  const std::vector<ChartSpec> charts = {
      {"prompt_scores", "Prompt micro-F1 on the dev split", "prompts/prompt_scores.tsv", "evaluate_prompts",
       prompt_scores_svg},
      {"extraction_scores", "Test-set extraction micro-F1", "extract/scores.tsv", "extract", extraction_scores_svg},
      {"annotation", "Reason accuracy and hallucination", "extract/annotation_summary.json", "extract",
       annotation_svg},
      {"learning_curve", "Baseline learning curves", "baselines/learning_curve.tsv", "baselines",
       learning_curve_svg},
      {"keywords", "Top c-TF-IDF terms per topic", "topics/keywords.tsv", "topics", keywords_svg},
      {"enrichment_heatmap", "Topic enrichment by subgroup", "enrich/enrichment.tsv", "enrich",
       enrichment_heatmap_svg},
  };
  for (const auto& c : charts) {
    ChartStatus status{c.name, false, {}};
    const fs::path src = artifacts_dir / c.artifact;
    std::string svg;
    if (!fs::exists(src)) {
      status.note = std::string(c.artifact) + " is missing; run stage '" + c.stage + "'";
    } else {
      try {
        svg = c.render(read_text_file(src));
        status.rendered = true;
      } catch (const std::exception& e) {
        status.note = std::string(c.artifact) + " could not be drawn: " + e.what();
      }
    }
    if (!status.rendered) svg = placeholder_svg(c.title, status.note);
    write(std::string(c.name) + ".svg", svg);
    result.charts.push_back(std::move(status));
  }

  const std::vector<std::pair<const char*, const char*>> tables = {
      {"detect/cohort_table.tsv", "cohort_table.tsv"},
      {"detect/pair_matrix.tsv", "pair_matrix.tsv"},
      {"prompts/prompt_scores.tsv", "prompt_scores.tsv"},
      {"extract/scores.tsv", "extraction_scores.tsv"},
      {"baselines/learning_curve.tsv", "learning_curve.tsv"},
      {"baselines/grid_selections.tsv", "grid_selections.tsv"},
      {"topics/keywords.tsv", "topic_keywords.tsv"},
      {"enrich/enrichment.tsv", "enrichment.tsv"},
  };
  std::vector<std::string> copied;
  for (const auto& [src, name] : tables) {
    if (fs::exists(artifacts_dir / src)) {
      write(name, read_text_file(artifacts_dir / src));
      copied.emplace_back(name);
    }
  }

  std::ostringstream index;
  index << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>switchminer report</title></head><body>\n";
  index << "<h1>switchminer report</h1>\n";
  index << "<p>Dashed lines labeled \"paper-reported\" mark values from the original clinical study. "
           "They are reference points, not results of this run. Topic reduction uses PCA in place of UMAP.</p>\n";
  for (const auto& c : result.charts) {
    index << "<h2>" << xml_escape(c.name) << "</h2>\n<img src=\"" << xml_escape(c.name) << ".svg\" alt=\""
          << xml_escape(c.name) << "\">\n";
    if (!c.rendered) index << "<p>" << xml_escape(c.note) << "</p>\n";
  }
  index << "<h2>Tables</h2>\n<ul>\n";
  for (const auto& name : copied) index << "<li><a href=\"" << name << "\">" << name << "</a></li>\n";
  index << "</ul>\n</body></html>\n";
  write("index.html", index.str());

  const bool any = std::any_of(result.charts.begin(), result.charts.end(), [](const auto& c) { return c.rendered; });
  result.exit_status = any ? 0 : 1;
  return result;
}

}  // namespace switchminer::report
