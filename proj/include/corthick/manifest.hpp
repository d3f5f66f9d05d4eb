// manifest.hpp - the cohort manifest and result tables that drive the
// cohort-level CLI commands. Plain CSV, paths relative to the manifest file,
// fixed "%.9g" float formatting so outputs are byte-stable across runs.

#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "corthick/grid.hpp"

namespace corthick {

struct ManifestEntry {
  int subject = 0;
  double atrophy_mm = 0.0;
  bool baseline = false;
  std::string wm_path;      // relative to the manifest location on disk
  std::string wmgm_path;
  std::string labels_path;  // may be empty
  double gt_thickness_mm = 0.0;
};

struct ResultRow {
  int subject = 0;
  double atrophy_mm = 0.0;
  bool baseline = false;
  double mean_mm = 0.0;
  double std_mm = 0.0;
  std::size_t gwi_count = 0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

} // namespace detail

inline void write_manifest(const std::vector<ManifestEntry>& entries,
                           const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  detail::require(out.good(), "cannot open file for writing: " + path);
  out << "subject,atrophy_mm,baseline,wm,wmgm,labels,gt_thickness_mm\n";
  for (const ManifestEntry& e : entries)
    out << e.subject << ',' << detail::format_double(e.atrophy_mm) << ','
        << (e.baseline ? 1 : 0) << ',' << e.wm_path << ',' << e.wmgm_path << ','
        << e.labels_path << ',' << detail::format_double(e.gt_thickness_mm) << '\n';
  out.flush();
  detail::require(out.good(), "write failure: " + path);
}

// Reads a manifest and resolves the volume paths against its directory.
inline std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  detail::require(in.good(), "cannot open manifest: " + path);
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  std::string line;
  detail::require(static_cast<bool>(std::getline(in, line)), path + ": empty manifest");
  detail::require(line.rfind("subject,atrophy_mm,baseline,wm,wmgm,labels", 0) == 0,
                  path + ": unexpected manifest header: " + line);
  std::vector<ManifestEntry> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    detail::require(f.size() == 7, path + ": manifest row has " +
                                       std::to_string(f.size()) + " fields, expected 7");
    ManifestEntry e;
    e.subject = std::stoi(f[0]);
    e.atrophy_mm = std::stod(f[1]);
    e.baseline = f[2] == "1";
    e.wm_path = (dir / f[3]).string();
    e.wmgm_path = (dir / f[4]).string();
    e.labels_path = f[5].empty() ? "" : (dir / f[5]).string();
    e.gt_thickness_mm = std::stod(f[6]);
    entries.push_back(std::move(e));
  }
  detail::require(!entries.empty(), path + ": manifest has no rows");
  return entries;
}

inline void write_results(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  detail::require(out.good(), "cannot open file for writing: " + path);
  out << "subject,atrophy_mm,baseline,mean_mm,std_mm,gwi_count\n";
  for (const ResultRow& r : rows)
    out << r.subject << ',' << detail::format_double(r.atrophy_mm) << ','
        << (r.baseline ? 1 : 0) << ',' << detail::format_double(r.mean_mm) << ','
        << detail::format_double(r.std_mm) << ',' << r.gwi_count << '\n';
  out.flush();
  detail::require(out.good(), "write failure: " + path);
}

inline std::vector<ResultRow> read_results(const std::string& path) {
  std::ifstream in(path);
  detail::require(in.good(), "cannot open results table: " + path);
  std::string line;
  detail::require(static_cast<bool>(std::getline(in, line)), path + ": empty results table");
  detail::require(line.rfind("subject,atrophy_mm,baseline,mean_mm,std_mm", 0) == 0,
                  path + ": unexpected results header: " + line);
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    detail::require(f.size() == 6, path + ": results row has " +
                                       std::to_string(f.size()) + " fields, expected 6");
    ResultRow r;
    r.subject = std::stoi(f[0]);
    r.atrophy_mm = std::stod(f[1]);
    r.baseline = f[2] == "1";
    r.mean_mm = std::stod(f[3]);
    r.std_mm = std::stod(f[4]);
    r.gwi_count = static_cast<std::size_t>(std::stoull(f[5]));
    rows.push_back(r);
  }
  detail::require(!rows.empty(), path + ": results table has no rows");
  return rows;
}

// Measured-atrophy statistics for a one-method results table: for every
// non-baseline row, measured = baseline mean CTh - row mean CTh of the same
// subject, paired with the induced level.
struct AtrophyPairs {
  std::vector<double> induced_mm;
  std::vector<double> measured_mm;
  std::size_t monotone_pairs = 0;   // consecutive level pairs, per subject
  std::size_t comparable_pairs = 0;
};

inline AtrophyPairs atrophy_pairs(const std::vector<ResultRow>& rows) {
  AtrophyPairs out;
  std::vector<int> subjects;
  for (const ResultRow& r : rows)
    if (std::find(subjects.begin(), subjects.end(), r.subject) == subjects.end())
      subjects.push_back(r.subject);
  for (int s : subjects) {
    double baseline_mean = 0.0;
    bool have_baseline = false;
    std::vector<std::pair<double, double>> levels;  // (induced, measured placeholder)
    for (const ResultRow& r : rows) {
      if (r.subject != s) continue;
      if (r.baseline) {
        baseline_mean = r.mean_mm;
        have_baseline = true;
      } else {
        levels.push_back({r.atrophy_mm, r.mean_mm});
      }
    }
    detail::require(have_baseline,
                    "atrophy_pairs: subject " + std::to_string(s) + " has no baseline row");
    std::sort(levels.begin(), levels.end());
    double prev_measured = 0.0;  // the baseline measures zero atrophy by definition
    for (const auto& [induced, mean_mm] : levels) {
      const double measured = baseline_mean - mean_mm;
      out.induced_mm.push_back(induced);
      out.measured_mm.push_back(measured);
      out.comparable_pairs += 1;
      if (measured + 1e-12 >= prev_measured) out.monotone_pairs += 1;
      prev_measured = measured;
    }
  }
  return out;
}

} // namespace corthick
