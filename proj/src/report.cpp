// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#include "vlsm/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "vlsm/error.hpp"

namespace vlsm {

Table& Table::row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size())
    throw ValidationError("table row has wrong cell count");
  rows_.push_back(std::move(cells));
  return *this;
}

std::string Table::to_csv(const std::vector<std::string>& provenance_lines) const {
  std::ostringstream out;
  for (const auto& line : provenance_lines) out << "# " << line << "\n";
  for (size_t c = 0; c < columns_.size(); ++c)
    out << columns_[c] << (c + 1 < columns_.size() ? "," : "\n");
  for (const auto& r : rows_)
    for (size_t c = 0; c < r.size(); ++c) out << r[c] << (c + 1 < r.size() ? "," : "\n");
  return out.str();
}

void Table::write_csv(const std::string& path,
                      const std::vector<std::string>& provenance_lines) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot open CSV for writing", path);
  out << to_csv(provenance_lines);
  if (!out) throw RuntimeError("failed to write CSV", path);
}

namespace {

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label, bool log_x,
                 bool log_y)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)),
      log_x_(log_x), log_y_(log_y) {}

void SvgPlot::add_series(std::string name, std::vector<double> x, std::vector<double> y,
                         std::string color, bool draw_line, bool draw_points) {
  if (x.size() != y.size()) throw ValidationError("series x/y length mismatch");
  series_.push_back({std::move(name), std::move(x), std::move(y), std::move(color),
                     draw_line, draw_points});
}

std::string SvgPlot::render() const {
  constexpr double W = 640, H = 480;
  constexpr double ML = 70, MR = 20, MT = 40, MB = 55;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series_)
    for (size_t i = 0; i < s.x.size(); ++i) {
      double xv = s.x[i], yv = s.y[i];
      if (log_x_ && xv <= 0) continue;
      if (log_y_ && yv <= 0) continue;
      xv = log_x_ ? std::log10(xv) : xv;
      yv = log_y_ ? std::log10(yv) : yv;
      xmin = std::min(xmin, xv);
      xmax = std::max(xmax, xv);
      ymin = std::min(ymin, yv);
      ymax = std::max(ymax, yv);
    }
  if (!(xmin < xmax)) {
    xmin -= 1;
    xmax += 1;
  }
  if (!(ymin < ymax)) {
    ymin -= 1;
    ymax += 1;
  }
  const double xpad = 0.05 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
  xmin -= xpad;
  xmax += xpad;
  ymin -= ypad;
  ymax += ypad;

  const auto px = [&](double v) {
    const double t = log_x_ ? std::log10(v) : v;
    return ML + (t - xmin) / (xmax - xmin) * (W - ML - MR);
  };
  const auto py = [&](double v) {
    const double t = log_y_ ? std::log10(v) : v;
    return H - MB - (t - ymin) / (ymax - ymin) * (H - MT - MB);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
         "font-family=\"sans-serif\">" << title_ << "</text>\n";

  // axes
  svg << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR << "\" y2=\""
      << H - MB << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\"" << H - MB
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 5.0;
    const double fy = ymin + (ymax - ymin) * i / 5.0;
    const double gx = ML + (W - ML - MR) * i / 5.0;
    const double gy = H - MB - (H - MT - MB) * i / 5.0;
    const double lx = log_x_ ? std::pow(10.0, fx) : fx;
    const double ly = log_y_ ? std::pow(10.0, fy) : fy;
    svg << "<line x1=\"" << fmt2(gx) << "\" y1=\"" << H - MB << "\" x2=\"" << fmt2(gx)
        << "\" y2=\"" << H - MB + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt2(gx) << "\" y=\"" << H - MB + 20
        << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
        << (log_x_ ? "" : "") << fmt2(lx) << "</text>\n";
    svg << "<line x1=\"" << ML - 5 << "\" y1=\"" << fmt2(gy) << "\" x2=\"" << ML << "\" y2=\""
        << fmt2(gy) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << ML - 8 << "\" y=\"" << fmt2(gy + 4)
        << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << fmt2(ly)
        << "</text>\n";
  }
  svg << "<text x=\"" << (ML + W - MR) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << x_label_
      << "</text>\n";
  svg << "<text x=\"16\" y=\"" << (MT + H - MB) / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
         "transform=\"rotate(-90 16 " << (MT + H - MB) / 2 << ")\">" << y_label_
      << "</text>\n";

  if (identity_) {
    const double lo = std::max(xmin, ymin), hi = std::min(xmax, ymax);
    if (lo < hi) {
      const double a = log_x_ ? std::pow(10.0, lo) : lo;
      const double b = log_x_ ? std::pow(10.0, hi) : hi;
      svg << "<line x1=\"" << fmt2(px(a)) << "\" y1=\"" << fmt2(py(a)) << "\" x2=\""
          << fmt2(px(b)) << "\" y2=\"" << fmt2(py(b))
          << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
    }
  }

  double legend_y = MT + 8;
  for (const auto& s : series_) {
    if (s.line && s.x.size() > 1) {
      svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      for (size_t i = 0; i < s.x.size(); ++i) {
        if ((log_x_ && s.x[i] <= 0) || (log_y_ && s.y[i] <= 0)) continue;
        svg << fmt2(px(s.x[i])) << "," << fmt2(py(s.y[i])) << " ";
      }
      svg << "\"/>\n";
    }
    if (s.points) {
      for (size_t i = 0; i < s.x.size(); ++i) {
        if ((log_x_ && s.x[i] <= 0) || (log_y_ && s.y[i] <= 0)) continue;
        svg << "<circle cx=\"" << fmt2(px(s.x[i])) << "\" cy=\"" << fmt2(py(s.y[i]))
            << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
      }
    }
    svg << "<rect x=\"" << W - MR - 150 << "\" y=\"" << fmt2(legend_y - 8)
        << "\" width=\"10\" height=\"10\" fill=\"" << s.color << "\"/>\n";
    svg << "<text x=\"" << W - MR - 135 << "\" y=\"" << fmt2(legend_y)
        << "\" font-size=\"11\" font-family=\"sans-serif\">" << s.name << "</text>\n";
    legend_y += 16;
  }
  svg << "</svg>\n";
  return svg.str();
}

void SvgPlot::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot open SVG for writing", path);
  out << render();
  if (!out) throw RuntimeError("failed to write SVG", path);
}

}  // namespace vlsm
