// SPDX-FileCopyrightText: Copyright (c) 2026 The NestDrug Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "nestdrug/molgraph.hpp"

namespace nestdrug::report {

/// Axis interval covering [min, max] of the data and 0, widened to a nice step.
struct AxisRange {
  double lo = 0;
  double hi = 1;
  double step = 0.2;
};
AxisRange axis_range(const std::vector<double>& values);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Fixed geometry and ordering; no timestamps, so equal inputs give byte-identical files.
std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values, const std::string& y_label = "");
std::string svg_line_chart(const std::string& title, const std::vector<Series>& series, const std::string& x_label = "",
                           const std::string& y_label = "");
/// Atoms on a circle, bonds as lines, fill intensity proportional to importance / max importance.
std::string svg_molecule_heatmap(const mol::MolGraph& m, const std::vector<double>& importance,
                                 const std::string& title = "");

/// Minimal comma-separated table (no quoting); the first row is the header.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
Table parse_csv(const std::string& text);
Table read_csv(const std::filesystem::path& path);

struct ReportOutput {
  std::vector<std::string> files;     // written, relative to the output directory, sorted
  std::vector<std::string> warnings;
};

/// Reads every *.csv in results_dir (sorted by name) and writes summary.json, summary.csv and
/// one bar chart per table with a numeric column into out_dir.
ReportOutput emit_report(const std::filesystem::path& results_dir, const std::filesystem::path& out_dir);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace nestdrug::report
