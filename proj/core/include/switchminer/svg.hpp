#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace switchminer::report {

/// Minimal SVG writer. Coordinates are printed with fixed precision so the
/// same drawing always serializes to the same bytes.
class SvgDocument {
 public:
  SvgDocument(double width, double height);

  void rect(double x, double y, double w, double h, std::string_view fill, std::string_view stroke = "none");
  void line(double x1, double y1, double x2, double y2, std::string_view stroke, double width = 1.0,
            std::string_view dash = {});
  void polyline(const std::vector<std::pair<double, double>>& points, std::string_view stroke, double width = 1.5);
  void circle(double cx, double cy, double r, std::string_view fill);
  /// anchor: "start", "middle" or "end".
  void text(double x, double y, std::string_view content, double size = 12, std::string_view anchor = "start",
            std::string_view fill = "#222", double rotate = 0.0);
  void title(std::string_view content);

  [[nodiscard]] std::string str() const;

 private:
  double width_;
  double height_;
  std::string body_;
};

std::string xml_escape(std::string_view s);
std::string fixed(double v, int decimals = 2);

/// Diverging blue-white-red colour for a value in [-limit, limit].
std::string diverging_color(double value, double limit);

}  // namespace switchminer::report
