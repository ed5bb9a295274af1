#include "splicegan/svg_plot.hpp"

#include <cstdio>
#include <fstream>

#include "splicegan/errors.hpp"

namespace splicegan {

namespace {

constexpr int kWidth = 560;
constexpr int kHeight = 520;
constexpr int kMarginLeft = 64;
constexpr int kMarginRight = 24;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 56;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

double px(double x) {
  return kMarginLeft + x * (kWidth - kMarginLeft - kMarginRight);
}

double py(double y) {
  return kHeight - kMarginBottom - y * (kHeight - kMarginTop - kMarginBottom);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series, bool draw_diagonal) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write SVG: " + path);

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << escape(title) << "</text>\n";

  // Axes with 0.25 gridlines.
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    out << "<line x1=\"" << px(v) << "\" y1=\"" << py(0) << "\" x2=\"" << px(v) << "\" y2=\""
        << py(1) << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    out << "<line x1=\"" << px(0) << "\" y1=\"" << py(v) << "\" x2=\"" << px(1) << "\" y2=\""
        << py(v) << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << px(v) << "\" y=\"" << py(0) + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(v)
        << "</text>\n";
    out << "<text x=\"" << px(0) - 8 << "\" y=\"" << py(v) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(v)
        << "</text>\n";
  }
  out << "<rect x=\"" << px(0) << "\" y=\"" << py(1) << "\" width=\"" << px(1) - px(0)
      << "\" height=\"" << py(0) - py(1)
      << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  out << "<text x=\"" << (px(0) + px(1)) / 2 << "\" y=\"" << kHeight - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << escape(x_label) << "</text>\n";
  out << "<text x=\"18\" y=\"" << (py(0) + py(1)) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 18 " << (py(0) + py(1)) / 2 << ")\">" << escape(y_label)
      << "</text>\n";

  if (draw_diagonal) {
    out << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\""
        << py(1) << "\" stroke=\"#999999\" stroke-width=\"1\" stroke-dasharray=\"5,4\"/>\n";
  }

  for (size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % (sizeof(kColors) / sizeof(kColors[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (const auto& [x, y] : series[s].points) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(x), py(y));
      out << buf;
    }
    out << "\"/>\n";
    const double ly = kMarginTop + 16.0 * static_cast<double>(s) + 12.0;
    out << "<line x1=\"" << px(0) + 12 << "\" y1=\"" << ly << "\" x2=\"" << px(0) + 36
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"1.8\"/>\n";
    out << "<text x=\"" << px(0) + 42 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(series[s].label)
        << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw IoError("failed writing SVG: " + path);
}

}  // namespace splicegan
