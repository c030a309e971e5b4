#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace switchminer::report {

struct ChartStatus {
  std::string name;  // file stem under report/
  bool rendered = false;
  std::string note;  // why a placeholder was drawn
};

struct ReportResult {
  std::vector<std::string> files;  // relative to the artifacts dir
  std::vector<ChartStatus> charts;
  /// Nonzero only when every chart fell back to a placeholder.
  int exit_status = 0;
};

/// Renders SVG charts and copies the delimited tables of an artifacts
/// directory into `<artifacts_dir>/report`. Output depends only on the
/// artifact contents. Reference values from the original study are drawn as
/// dashed lines labeled "paper-reported", never as computed results.
ReportResult emit_report(const std::filesystem::path& artifacts_dir);

// Chart renderers, exposed for testing. Each takes the text of the artifact it draws.
std::string prompt_scores_svg(const std::string& prompt_scores_tsv);
std::string extraction_scores_svg(const std::string& scores_tsv);
std::string learning_curve_svg(const std::string& learning_curve_tsv);
std::string keywords_svg(const std::string& keywords_tsv);
std::string enrichment_heatmap_svg(const std::string& enrichment_tsv);
std::string annotation_svg(const std::string& annotation_summary_json);
std::string placeholder_svg(const std::string& title, const std::string& explanation);

/// Tab-separated rows with the header row first; blank lines dropped.
std::vector<std::vector<std::string>> parse_tsv(const std::string& text);

}  // namespace switchminer::report
