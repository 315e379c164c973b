#pragma once

// Table rendering for evaluation results: rows are training
// configurations, column pairs are (F1, EM) per dataset. A group holding
// several reports for the same dataset (one per training seed) renders
// as the mean across seeds.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "squadgen/errors.hpp"
#include "squadgen/eval_metrics.hpp"

namespace squadgen {

struct ReportGroup {
  std::string name;  // row label, e.g. a training configuration
  std::vector<EvalReport> reports;
};

enum class ReportFormat { markdown, csv, json };

inline ReportFormat report_format_from_name(const std::string& s) {
  if (s == "markdown") return ReportFormat::markdown;
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw ConfigError("unknown report format: " + s);
}

namespace detail {

// Canonical column order; datasets outside this list follow
// alphabetically.
inline int dataset_rank(const std::string& name) {
  static const std::vector<std::string> order = {"SQUAD", "NewWiki", "NYT",
                                                 "Amazon", "Reddit"};
  auto lower = [](std::string s) {
    for (char& c : s)
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return s;
  };
  for (size_t i = 0; i < order.size(); ++i)
    if (lower(order[i]) == lower(name)) return static_cast<int>(i);
  return static_cast<int>(order.size());
}

struct Cell {
  double f1 = 0.0;
  double em = 0.0;
  size_t seeds = 0;
};

}  // namespace detail

struct RenderedReport {
  std::vector<std::string> datasets;           // column order
  std::vector<std::string> rows;               // row labels
  // row label -> dataset -> mean cell
  std::map<std::string, std::map<std::string, detail::Cell>> cells;
  std::vector<std::string> warnings;
};

inline RenderedReport aggregate_report(const std::vector<ReportGroup>& groups) {
  if (groups.empty()) throw ValidationError("report: no groups");
  RenderedReport out;
  std::set<std::string> all_datasets;
  for (const auto& g : groups) {
    out.rows.push_back(g.name);
    auto& row = out.cells[g.name];
    for (const auto& r : g.reports) {
      auto& cell = row[r.dataset_name];
      cell.f1 += r.f1;
      cell.em += r.em;
      ++cell.seeds;
      all_datasets.insert(r.dataset_name);
    }
  }
  for (auto& [row, cols] : out.cells)
    for (auto& [name, cell] : cols)
      if (cell.seeds) {
        cell.f1 /= static_cast<double>(cell.seeds);
        cell.em /= static_cast<double>(cell.seeds);
      }

  out.datasets.assign(all_datasets.begin(), all_datasets.end());
  std::sort(out.datasets.begin(), out.datasets.end(),
            [](const std::string& a, const std::string& b) {
              const int ra = detail::dataset_rank(a),
                        rb = detail::dataset_rank(b);
              return ra != rb ? ra < rb : a < b;
            });

  for (const auto& g : groups) {
    std::set<std::string> present;
    for (const auto& r : g.reports) present.insert(r.dataset_name);
    if (present.size() != all_datasets.size())
      out.warnings.push_back("row '" + g.name +
                             "' is missing some datasets present elsewhere");
  }
  return out;
}

inline std::string render_markdown(const RenderedReport& r) {
  std::string out = "| Dataset |";
  for (const auto& d : r.datasets) out += " " + d + " F1 | " + d + " EM |";
  if (!r.warnings.empty()) out += " Warnings |";
  out += "\n|---|";
  for (size_t i = 0; i < r.datasets.size(); ++i) out += "---|---|";
  if (!r.warnings.empty()) out += "---|";
  out += "\n";
  for (const auto& row : r.rows) {
    out += "| " + row + " |";
    for (const auto& d : r.datasets) {
      auto cols = r.cells.at(row);
      auto it = cols.find(d);
      if (it == cols.end() || it->second.seeds == 0) {
        out += " - | - |";
      } else {
        out += " " + format_score(it->second.f1) + " | " +
               format_score(it->second.em) + " |";
      }
    }
    if (!r.warnings.empty()) {
      std::string w;
      for (const auto& msg : r.warnings)
        if (msg.find("'" + row + "'") != std::string::npos)
          w += (w.empty() ? "" : "; ") + msg;
      out += " " + (w.empty() ? std::string("-") : w) + " |";
    }
    out += "\n";
  }
  return out;
}

inline std::string render_csv(const RenderedReport& r) {
  auto quote = [](const std::string& s) {
    std::string out = "\"";
    for (const char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    out += '"';
    return out;
  };
  std::string out = "row";
  for (const auto& d : r.datasets)
    out += "," + quote(d + " F1") + "," + quote(d + " EM");
  out += "\n";
  for (const auto& row : r.rows) {
    out += quote(row);
    for (const auto& d : r.datasets) {
      auto cols = r.cells.at(row);
      auto it = cols.find(d);
      if (it == cols.end() || it->second.seeds == 0) {
        out += ",,";
      } else {
        out += "," + format_score(it->second.f1) + "," +
               format_score(it->second.em);
      }
    }
    out += "\n";
  }
  return out;
}

inline std::string render_json(const RenderedReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json cols = nlohmann::json::object();
    for (const auto& d : r.datasets) {
      auto all = r.cells.at(row);
      auto it = all.find(d);
      if (it == all.end() || it->second.seeds == 0) continue;
      cols[d] = {{"f1", it->second.f1},
                 {"em", it->second.em},
                 {"seeds", it->second.seeds}};
    }
    rows.push_back({{"row", row}, {"datasets", cols}});
  }
  return nlohmann::json{{"datasets", r.datasets},
                        {"rows", rows},
                        {"warnings", r.warnings}}
             .dump(1) +
         "\n";
}

inline std::string render_report(const std::vector<ReportGroup>& groups,
                                 ReportFormat format) {
  const auto agg = aggregate_report(groups);
  switch (format) {
    case ReportFormat::markdown: return render_markdown(agg);
    case ReportFormat::csv: return render_csv(agg);
    default: return render_json(agg);
  }
}

}  // namespace squadgen
