#include <sstream>

#include "doctest.h"
#include "switchminer/error.hpp"
#include "switchminer/jsonl.hpp"
#include "switchminer/report.hpp"
#include "test_support.hpp"

using namespace switchminer;
using namespace switchminer::report;

namespace {

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

const char* kCurveHeader = "task\tmodel\tscheme\tfraction\tmean_f1\tsd_f1\tn_repeats\n";

std::string enrichment_table(int topics, int subgroups) {
  std::ostringstream t;
  t << "topic\tsubgroup\ttheta\tlift\tlog2_lift\n";
  for (int k = 1; k <= topics; ++k) {
    for (int j = 0; j < subgroups; ++j) {
      t << k << "\tg" << j << "\t0.1\t1.0\t" << (k == 1 && j == 0 ? "NA" : std::to_string(0.1 * (k - j))) << '\n';
    }
  }
  return t.str();
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("parse_tsv drops blank lines and keeps the header first") {
  const auto rows = parse_tsv("a\tb\n\n1\t2\n3\t\n");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"a", "b"});
  CHECK(rows[1] == std::vector<std::string>{"1", "2"});
  CHECK(rows[2] == std::vector<std::string>{"3", ""});
  CHECK(parse_tsv("").empty());
}

TEST_CASE("a one-row learning curve draws one point per task") {
  const std::string one = std::string(kCurveHeader) + "started\trf\ttfidf\t1.00\t0.7000\t0.0100\t5\n";
  const auto svg = learning_curve_svg(one);
  CHECK(count(svg, "<circle") == 1);
  CHECK(svg.find("paper-reported") != std::string::npos);
  const std::string two = one + "stopped\trf\ttfidf\t1.00\t0.4000\t0.0100\t5\n";
  CHECK(count(learning_curve_svg(two), "<circle") == 2);
  CHECK_THROWS_AS(learning_curve_svg(kCurveHeader), InvalidInput);
}

TEST_CASE("unavailable learning-curve cells are not drawn") {
  const std::string t = std::string(kCurveHeader) + "started\tlogreg\tbow\t1.00\tNA\tNA\t0\n" +
                        "started\tlogreg\tbow\t0.50\t0.6000\t0.0200\t5\n";
  CHECK(count(learning_curve_svg(t), "<circle") == 1);
}

TEST_CASE("a ten by six enrichment table gives sixty heatmap cells") {
  const auto svg = enrichment_heatmap_svg(enrichment_table(10, 6));
  CHECK(count(svg, "stroke=\"#ffffff\"") == 60);
  CHECK(count(svg, ">NA<") == 1);
}

TEST_CASE("charts are byte-identical for identical inputs") {
  const auto t = enrichment_table(4, 3);
  CHECK(enrichment_heatmap_svg(t) == enrichment_heatmap_svg(t));
  const std::string curve = std::string(kCurveHeader) + "started\trf\tbow\t0.10\t0.5000\t0.0100\t5\n" +
                            "started\trf\tbow\t1.00\t0.7000\t0.0100\t5\n";
  CHECK(learning_curve_svg(curve) == learning_curve_svg(curve));
}

TEST_CASE("reference values are labeled paper-reported") {
  const std::string prompts =
      "prompt_id\tsystem_role\toutput_format\treference\tstarted_f1\tstopped_f1\tmean_f1\tn_notes\tn_errors\n"
      "1\tnone\tstructured_object\tgold\t0.9000\t0.8000\t0.8500\t50\t0\n";
  CHECK(prompt_scores_svg(prompts).find("paper-reported") != std::string::npos);
  const std::string scores =
      "reference\tfield\tmicro_f1\tkappa\terror_rate\tn\n"
      "gold\tstarted\t0.9000\tNA\t0.1000\t100\n"
      "gold\tstopped\t0.8000\tNA\t0.2000\t100\n";
  CHECK(extraction_scores_svg(scores).find("paper-reported") != std::string::npos);
  const auto note = annotation_svg(R"({"n": 10, "reason_accuracy": 0.9, "hallucination_rate": 0.0})");
  CHECK(note.find("paper-reported") != std::string::npos);
}

TEST_CASE("missing artifacts become placeholders and all-missing is a failure") {
  testing::TempDir dir("report");
  const auto empty = emit_report(dir.path());
  CHECK(empty.exit_status == 1);
  REQUIRE_FALSE(empty.charts.empty());
  for (const auto& c : empty.charts) {
    CHECK_FALSE(c.rendered);
    CHECK(c.note.find("is missing; run stage") != std::string::npos);
    CHECK(std::filesystem::exists(dir / ("report/" + c.name + ".svg")));
  }
  CHECK(std::filesystem::exists(dir / "report/index.html"));

  write_text_file(dir / "enrich/enrichment.tsv", enrichment_table(2, 2));
  const auto partial = emit_report(dir.path());
  CHECK(partial.exit_status == 0);
  int rendered = 0;
  for (const auto& c : partial.charts) rendered += c.rendered;
  CHECK(rendered == 1);
  CHECK(read_text_file(dir / "report/enrichment.tsv") == enrichment_table(2, 2));
}

TEST_CASE("an unreadable artifact is reported in its placeholder") {
  testing::TempDir dir("report");
  write_text_file(dir / "baselines/learning_curve.tsv", "task\tmodel\n");
  const auto r = emit_report(dir.path());
  bool found = false;
  for (const auto& c : r.charts) {
    if (c.name == "learning_curve") {
      found = true;
      CHECK_FALSE(c.rendered);
      CHECK(c.note.find("could not be drawn") != std::string::npos);
    }
  }
  CHECK(found);
}

TEST_CASE("placeholder text is escaped") {
  const auto svg = placeholder_svg("A & B", "x < y");
  CHECK(svg.find("A &amp; B") != std::string::npos);
  CHECK(svg.find("x &lt; y") != std::string::npos);
}

}  // TEST_SUITE
