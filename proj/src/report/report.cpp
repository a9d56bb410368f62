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

#include "nestdrug/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "nestdrug/errors.hpp"
#include "nestdrug/evalkit.hpp"

namespace nestdrug::report {

namespace fs = std::filesystem;

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 80;
constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"11\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + "<text x=\"" + num(kWidth / 2) +
         "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) + "</text>\n";
}

struct Frame {
  AxisRange y;
  double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  double py(double v) const { return y0 - (v - y.lo) / (y.hi - y.lo) * (y0 - y1); }
};

std::string y_axis(const Frame& f, const std::string& label) {
  std::string s = "<line x1=\"" + num(f.x0) + "\" y1=\"" + num(f.y0) + "\" x2=\"" + num(f.x0) + "\" y2=\"" +
                  num(f.y1) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(f.x0) + "\" y1=\"" + num(f.y0) + "\" x2=\"" + num(f.x1) + "\" y2=\"" + num(f.y0) +
       "\" stroke=\"black\"/>\n";
  const int n = static_cast<int>(std::lround((f.y.hi - f.y.lo) / f.y.step));
  for (int i = 0; i <= n; ++i) {
    const double v = f.y.lo + i * f.y.step;
    const double y = f.py(v);
    s += "<line x1=\"" + num(f.x0 - 4) + "\" y1=\"" + num(y) + "\" x2=\"" + num(f.x0) + "\" y2=\"" + num(y) +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(f.x0 - 6) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + tick(v) + "</text>\n";
  }
  if (!label.empty()) {
    s += "<text x=\"16\" y=\"" + num((f.y0 + f.y1) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         num((f.y0 + f.y1) / 2) + ")\">" + escape(label) + "</text>\n";
  }
  return s;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace

AxisRange axis_range(const std::vector<double>& values) {
  double lo = 0, hi = 0;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi - lo < 1e-12) hi = lo + 1;
  const double raw = (hi - lo) / 5;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  AxisRange r;
  r.step = step;
  r.lo = std::floor(lo / step + 1e-9) * step;
  r.hi = std::ceil(hi / step - 1e-9) * step;
  if (r.lo > lo) r.lo -= step;
  if (r.hi < hi) r.hi += step;
  return r;
}

std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values, const std::string& y_label) {
  require(labels.size() == values.size(), ErrorKind::Shape, "bar chart labels and values differ in length");
  Frame f;
  f.y = axis_range(values);
  std::string s = header(title) + y_axis(f, y_label);
  const double slot = values.empty() ? 0 : (f.x1 - f.x0) / static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = f.x0 + slot * (static_cast<double>(i) + 0.15);
    const double top = f.py(std::max(values[i], 0.0)), base = f.py(std::min(values[i], 0.0));
    s += "<rect x=\"" + num(x) + "\" y=\"" + num(top) + "\" width=\"" + num(slot * 0.7) + "\" height=\"" +
         num(base - top) + "\" fill=\"" + kPalette[0] + "\"><title>" + escape(labels[i]) + ": " +
         eval::format_number(values[i]) + "</title></rect>\n";
    const double cx = f.x0 + slot * (static_cast<double>(i) + 0.5);
    s += "<text x=\"" + num(cx) + "\" y=\"" + num(f.y0 + 14) + "\" text-anchor=\"end\" transform=\"rotate(-40 " +
         num(cx) + " " + num(f.y0 + 14) + ")\">" + escape(labels[i]) + "</text>\n";
  }
  return s + "</svg>\n";
}

std::string svg_line_chart(const std::string& title, const std::vector<Series>& series, const std::string& x_label,
                           const std::string& y_label) {
  std::vector<double> ys, xs;
  for (const auto& se : series) {
    require(se.x.size() == se.y.size(), ErrorKind::Shape, "series x and y differ in length");
    ys.insert(ys.end(), se.y.begin(), se.y.end());
    xs.insert(xs.end(), se.x.begin(), se.x.end());
  }
  Frame f;
  f.y = axis_range(ys);
  const AxisRange xr = axis_range(xs);
  auto px = [&](double v) { return f.x0 + (v - xr.lo) / (xr.hi - xr.lo) * (f.x1 - f.x0); };
  std::string s = header(title) + y_axis(f, y_label);
  const int n = static_cast<int>(std::lround((xr.hi - xr.lo) / xr.step));
  for (int i = 0; i <= n; ++i) {
    const double v = xr.lo + i * xr.step;
    s += "<text x=\"" + num(px(v)) + "\" y=\"" + num(f.y0 + 16) + "\" text-anchor=\"middle\">" + tick(v) +
         "</text>\n";
  }
  if (!x_label.empty())
    s += "<text x=\"" + num((f.x0 + f.x1) / 2) + "\" y=\"" + num(f.y0 + 36) + "\" text-anchor=\"middle\">" +
         escape(x_label) + "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % std::size(kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < series[k].x.size(); ++i)
      pts += (i ? " " : "") + num(px(series[k].x[i])) + "," + num(f.py(series[k].y[i]));
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + pts +
         "\"/>\n";
    const double ly = kTop + 14 * static_cast<double>(k);
    s += "<text x=\"" + num(f.x1 - 4) + "\" y=\"" + num(ly) + "\" text-anchor=\"end\" fill=\"" + color + "\">" +
         escape(series[k].name) + "</text>\n";
  }
  return s + "</svg>\n";
}

std::string svg_molecule_heatmap(const mol::MolGraph& m, const std::vector<double>& importance,
                                 const std::string& title) {
  require(importance.size() == m.num_atoms(), ErrorKind::Shape, "one importance per atom required");
  const double peak = importance.empty() ? 0 : *std::max_element(importance.begin(), importance.end());
  const double cx = kWidth / 2, cy = kHeight / 2 + 10, radius = std::min(kWidth, kHeight) / 2 - 50;
  const std::size_t n = m.num_atoms();
  auto pos = [&](std::size_t i) {
    const double a = 2 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(n, 1));
    return std::pair{cx + radius * std::cos(a), cy + radius * std::sin(a)};
  };
  std::string s = header(title);
  for (std::size_t e = 0; e < m.num_bonds(); ++e) {
    const auto& b = m.bond(e);
    const auto [x1, y1] = pos(static_cast<std::size_t>(b.begin));
    const auto [x2, y2] = pos(static_cast<std::size_t>(b.end));
    s += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
         "\" stroke=\"#888\" stroke-width=\"2\"/>\n";
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto [x, y] = pos(i);
    const double w = peak > 0 ? importance[i] / peak : 0;
    const int g = static_cast<int>(std::lround(255 * (1 - w)));
    char fill[16];
    std::snprintf(fill, sizeof(fill), "#ff%02x%02x", g, g);
    const std::string sym(mol::element_by_number(m.atom(i).atomic_number).symbol);
    s += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"14\" fill=\"" + fill +
         "\" stroke=\"black\"><title>" + std::to_string(i) + " " + sym + ": " + eval::format_number(importance[i]) +
         "</title></circle>\n";
    s += "<text x=\"" + num(x) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"middle\">" + escape(sym) + "</text>\n";
  }
  return s + "</svg>\n";
}

Table parse_csv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      require(cells.size() == t.header.size(), ErrorKind::Data,
              "CSV row has " + std::to_string(cells.size()) + " cells, header has " + std::to_string(t.header.size()));
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Table read_csv(const fs::path& path) { return parse_csv(read_file(path)); }

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + tmp.string());
    out << content;
    out.close();
    require(!out.fail(), ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  require(!ec, ErrorKind::Io, "cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

ReportOutput emit_report(const fs::path& results_dir, const fs::path& out_dir) {
  require(fs::is_directory(results_dir), ErrorKind::Io, "results directory not found: " + results_dir.string());
  std::vector<fs::path> csvs;
  for (const auto& e : fs::directory_iterator(results_dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") csvs.push_back(e.path());
  std::sort(csvs.begin(), csvs.end());

  ReportOutput out;
  nlohmann::ordered_json summary;
  auto tables = nlohmann::ordered_json::array();
  std::string summary_csv = "file,column,n,mean,min,max\n";
  if (csvs.empty()) out.warnings.push_back("no CSV files in " + results_dir.string());

  for (const auto& path : csvs) {
    const Table t = read_csv(path);
    const std::string name = path.filename().string();
    nlohmann::ordered_json entry;
    entry["file"] = name;
    entry["rows"] = t.rows.size();
    entry["columns"] = t.header;
    nlohmann::ordered_json means = nlohmann::ordered_json::object();
    std::vector<std::size_t> numeric;
    std::ptrdiff_t label_col = -1;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      std::vector<double> vals;
      bool ok = true;
      for (const auto& row : t.rows) {
        double v;
        if (row[c].empty()) continue;
        if (!parse_double(row[c], v)) {
          ok = false;
          break;
        }
        vals.push_back(v);
      }
      if (!ok || vals.empty()) {
        if (!ok && label_col < 0) label_col = static_cast<std::ptrdiff_t>(c);
        continue;
      }
      numeric.push_back(c);
      double mean = 0;
      for (double v : vals) mean += v / static_cast<double>(vals.size());
      const auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
      means[t.header[c]] = mean;
      summary_csv += name + "," + t.header[c] + "," + std::to_string(vals.size()) + "," + eval::format_number(mean) +
                     "," + eval::format_number(*mn) + "," + eval::format_number(*mx) + "\n";
    }
    entry["means"] = std::move(means);
    if (numeric.empty()) {
      out.warnings.push_back(name + ": no numeric column");
    } else {
      std::size_t primary = numeric.front();
      for (const char* key : {"auc", "enrichment", "delta"}) {
        const auto it = std::find_if(numeric.begin(), numeric.end(), [&](std::size_t c) {
          return t.header[c].find(key) != std::string::npos;
        });
        if (it != numeric.end()) {
          primary = *it;
          break;
        }
      }
      std::vector<std::string> labels;
      std::vector<double> values;
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        double v;
        if (!parse_double(t.rows[r][primary], v)) continue;
        labels.push_back(label_col >= 0 ? t.rows[r][static_cast<std::size_t>(label_col)] : std::to_string(r));
        values.push_back(v);
      }
      const std::string svg_name = path.stem().string() + ".svg";
      write_file_atomic(out_dir / svg_name, svg_bar_chart(path.stem().string() + ": " + t.header[primary], labels,
                                                          values, t.header[primary]));
      entry["chart"] = svg_name;
      out.files.push_back(svg_name);
    }
    tables.push_back(std::move(entry));
  }
  summary["tables"] = std::move(tables);
  summary["warnings"] = out.warnings;
  write_file_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
  write_file_atomic(out_dir / "summary.csv", summary_csv);
  out.files.push_back("summary.csv");
  out.files.push_back("summary.json");
  std::sort(out.files.begin(), out.files.end());
  return out;
}

}  // namespace nestdrug::report
