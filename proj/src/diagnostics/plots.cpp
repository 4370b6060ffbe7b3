#include "cdga/diagnostics/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace cdga {

namespace {

constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); }
  double py(double y) const { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); }
};

Frame frame_for(const std::vector<Series>& series) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (double v : s.x) if (std::isfinite(v)) { x0 = std::min(x0, v); x1 = std::max(x1, v); }
    for (double v : s.y) if (std::isfinite(v)) { y0 = std::min(y0, v); y1 = std::max(y1, v); }
  }
  if (!std::isfinite(x0)) { x0 = 0; x1 = 1; y0 = 0; y1 = 1; }
  if (x1 == x0) { x0 -= 0.5; x1 += 0.5; }
  if (y1 == y0) { y0 -= 0.5; y1 += 0.5; }
  const double mx = 0.05 * (x1 - x0), my = 0.05 * (y1 - y0);
  return {x0 - mx, x1 + mx, y0 - my, y1 + my};
}

void header(std::ostringstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(title) << "</text>\n";
}

void axes(std::ostringstream& out, const Frame& f, const std::string& xl, const std::string& yl) {
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kW - kLeft - kRight
      << "\" height=\"" << kH - kTop - kBottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    out << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << kH - kBottom + 15
        << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
    out << "<text x=\"" << kLeft - 5 << "\" y=\"" << num(f.py(yv) + 4) << "\" text-anchor=\"end\">"
        << num(yv) << "</text>\n";
  }
  out << "<text x=\"" << (kLeft + kW - kRight) / 2 << "\" y=\"" << kH - 10
      << "\" text-anchor=\"middle\">" << escape(xl) << "</text>\n";
  out << "<text x=\"15\" y=\"" << kH / 2 << "\" transform=\"rotate(-90 15 " << kH / 2
      << ")\" text-anchor=\"middle\">" << escape(yl) << "</text>\n";
}

void legend(std::ostringstream& out, const std::vector<Series>& series) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = kTop + 10 + 16.0 * static_cast<double>(i);
    out << "<rect x=\"" << kW - kRight + 10 << "\" y=\"" << y - 8 << "\" width=\"10\" height=\"10\" fill=\""
        << kPalette[i % 10] << "\"/>\n<text x=\"" << kW - kRight + 25 << "\" y=\"" << y + 1 << "\">"
        << escape(series[i].name) << "</text>\n";
  }
}

}  // namespace

std::string line_plot_svg(const std::vector<Series>& series, const std::string& title,
                          const std::string& x_label, const std::string& y_label) {
  std::ostringstream out;
  header(out, title);
  const Frame f = frame_for(series);
  axes(out, f, x_label, y_label);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    out << "<polyline fill=\"none\" stroke=\"" << kPalette[i % 10] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      out << num(f.px(s.x[k])) << ',' << num(f.py(s.y[k])) << ' ';
    }
    out << "\"/>\n";
  }
  legend(out, series);
  out << "</svg>\n";
  return out.str();
}

std::string scatter_svg(const std::vector<Series>& groups, const std::string& title) {
  std::ostringstream out;
  header(out, title);
  const Frame f = frame_for(groups);
  axes(out, f, "", "");
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& s = groups[i];
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      out << "<circle cx=\"" << num(f.px(s.x[k])) << "\" cy=\"" << num(f.py(s.y[k]))
          << "\" r=\"2.5\" fill=\"" << kPalette[i % 10] << "\" fill-opacity=\"0.7\"/>\n";
    }
  }
  legend(out, groups);
  out << "</svg>\n";
  return out.str();
}

std::string heatmap_svg(const Eigen::MatrixXd& values, const std::vector<std::string>& rows,
                        const std::vector<std::string>& cols, const std::string& title) {
  std::ostringstream out;
  const double cell = 36, left = 180, top = 60;
  const double width = left + cell * static_cast<double>(values.cols()) + 20;
  const double height = top + cell * static_cast<double>(values.rows()) + 180;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"10\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"10\" y=\"20\" font-size=\"14\">" << escape(title) << "</text>\n";
  const double lo = values.size() ? values.minCoeff() : 0.0;
  const double hi = values.size() ? values.maxCoeff() : 1.0;
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    out << "<text x=\"" << left - 5 << "\" y=\"" << top + cell * (r + 0.6) << "\" text-anchor=\"end\">"
        << escape(r < static_cast<Eigen::Index>(rows.size()) ? rows[r] : "") << "</text>\n";
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const double t = hi > lo ? (values(r, c) - lo) / (hi - lo) : 0.0;
      const int shade = static_cast<int>(std::lround(255 * (1.0 - t)));
      out << "<rect x=\"" << left + cell * c << "\" y=\"" << top + cell * r << "\" width=\"" << cell
          << "\" height=\"" << cell << "\" fill=\"rgb(255," << shade << ',' << shade << ")\"/>\n"
          << "<text x=\"" << left + cell * (c + 0.5) << "\" y=\"" << top + cell * (r + 0.6)
          << "\" text-anchor=\"middle\">" << num(values(r, c)) << "</text>\n";
    }
  }
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    const double x = left + cell * (c + 0.5), y = top + cell * values.rows() + 8;
    out << "<text x=\"" << x << "\" y=\"" << y << "\" transform=\"rotate(60 " << x << ' ' << y << ")\">"
        << escape(c < static_cast<Eigen::Index>(cols.size()) ? cols[c] : "") << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string series_csv(const std::vector<Series>& series) {
  std::ostringstream out;
  out << "series,x,y\n";
  for (const auto& s : series) {
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      out << s.name << ',' << num(s.x[k]) << ',' << num(s.y[k]) << '\n';
    }
  }
  return out.str();
}

}  // namespace cdga
