// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace vlsm {

// CSV table with cells pre-formatted deterministically. Provenance lines are
// written as leading '#' comments so bodies can be compared across runs.
class Table {
public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  Table& row(std::vector<std::string> cells);
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  std::string to_csv(const std::vector<std::string>& provenance_lines = {}) const;
  void write_csv(const std::string& path,
                 const std::vector<std::string>& provenance_lines = {}) const;

  static std::string na() { return "NA"; }

private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

// Minimal standalone SVG scatter/line plots, deterministic output.
class SvgPlot {
public:
  SvgPlot(std::string title, std::string x_label, std::string y_label,
          bool log_x = false, bool log_y = false);

  void add_series(std::string name, std::vector<double> x, std::vector<double> y,
                  std::string color, bool draw_line, bool draw_points);
  void add_identity_line() { identity_ = true; }

  std::string render() const;
  void write(const std::string& path) const;

private:
  std::string title_, x_label_, y_label_;
  bool log_x_, log_y_;
  bool identity_ = false;
  struct Series {
    std::string name;
    std::vector<double> x, y;
    std::string color;
    bool line, points;
  };
  std::vector<Series> series_;
};

}  // namespace vlsm
