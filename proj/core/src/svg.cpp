#include "switchminer/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace switchminer::report {

std::string fixed(double v, int decimals) {
  char buf[64];
  if (std::abs(v) < 0.5 * std::pow(10.0, -decimals)) v = 0.0;  // avoid "-0.00"
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string diverging_color(double value, double limit) {
  const double t = limit > 0 ? std::clamp(value / limit, -1.0, 1.0) : 0.0;
  int r = 255, g = 255, b = 255;
  if (t > 0) {
    g = b = static_cast<int>(std::lround(255 * (1 - t)));
    r = static_cast<int>(std::lround(255 - 40 * t));
  } else if (t < 0) {
    r = g = static_cast<int>(std::lround(255 * (1 + t)));
    b = static_cast<int>(std::lround(255 + 40 * t));
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

SvgDocument::SvgDocument(double width, double height) : width_(width), height_(height) {}

void SvgDocument::rect(double x, double y, double w, double h, std::string_view fill, std::string_view stroke) {
  body_ += "<rect x=\"" + fixed(x) + "\" y=\"" + fixed(y) + "\" width=\"" + fixed(w) + "\" height=\"" + fixed(h) +
           "\" fill=\"" + std::string(fill) + "\" stroke=\"" + std::string(stroke) + "\"/>\n";
}

void SvgDocument::line(double x1, double y1, double x2, double y2, std::string_view stroke, double width,
                       std::string_view dash) {
  body_ += "<line x1=\"" + fixed(x1) + "\" y1=\"" + fixed(y1) + "\" x2=\"" + fixed(x2) + "\" y2=\"" + fixed(y2) +
           "\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"" + fixed(width) + "\"";
  if (!dash.empty()) body_ += " stroke-dasharray=\"" + std::string(dash) + "\"";
  body_ += "/>\n";
}

void SvgDocument::polyline(const std::vector<std::pair<double, double>>& points, std::string_view stroke,
                           double width) {
  body_ += "<polyline fill=\"none\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"" + fixed(width) +
           "\" points=\"";
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) body_ += ' ';
    body_ += fixed(points[i].first) + "," + fixed(points[i].second);
  }
  body_ += "\"/>\n";
}

void SvgDocument::circle(double cx, double cy, double r, std::string_view fill) {
  body_ += "<circle cx=\"" + fixed(cx) + "\" cy=\"" + fixed(cy) + "\" r=\"" + fixed(r) + "\" fill=\"" +
           std::string(fill) + "\"/>\n";
}

void SvgDocument::text(double x, double y, std::string_view content, double size, std::string_view anchor,
                       std::string_view fill, double rotate) {
  body_ += "<text x=\"" + fixed(x) + "\" y=\"" + fixed(y) + "\" font-size=\"" + fixed(size, 1) +
           "\" text-anchor=\"" + std::string(anchor) + "\" fill=\"" + std::string(fill) + "\"";
  if (rotate != 0.0) body_ += " transform=\"rotate(" + fixed(rotate, 1) + " " + fixed(x) + " " + fixed(y) + ")\"";
  body_ += ">" + xml_escape(content) + "</text>\n";
}

void SvgDocument::title(std::string_view content) { text(width_ / 2, 22, content, 15, "middle"); }

std::string SvgDocument::str() const {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width_, 0) + "\" height=\"" +
         fixed(height_, 0) + "\" viewBox=\"0 0 " + fixed(width_, 0) + " " + fixed(height_, 0) +
         "\" font-family=\"Helvetica, Arial, sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
         body_ + "</svg>\n";
}

}  // namespace switchminer::report
