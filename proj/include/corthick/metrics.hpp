// metrics.hpp - agreement and sensitivity statistics.

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "corthick/grid.hpp"

namespace corthick {

// n targets x k raters, row-major, no missing entries.
struct RatingsTable {
  int n = 0;
  int k = 0;
  std::vector<double> values;

  double at(int target, int rater) const { return values[target * k + rater]; }

  void validate() const {
    detail::require(n >= 2 && k >= 2,
                    "RatingsTable: need n >= 2 targets and k >= 2 raters, got n=" +
                        std::to_string(n) + " k=" + std::to_string(k));
    detail::require(values.size() == static_cast<std::size_t>(n) * k,
                    "RatingsTable: values length does not match n*k");
    for (double v : values)
      detail::require(std::isfinite(v), "RatingsTable: non-finite rating");
  }
};

// Two-way random-effects, absolute-agreement, single-measure intraclass
// correlation: (MS_R - MS_E) / (MS_R + (k-1) MS_E + (k/n)(MS_C - MS_E)).
inline double icc_2_1(const RatingsTable& t) {
  t.validate();
  const int n = t.n, k = t.k;
  double grand = 0.0;
  for (double v : t.values) grand += v;
  grand /= static_cast<double>(n) * k;

  std::vector<double> row_mean(n, 0.0), col_mean(k, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) {
      row_mean[i] += t.at(i, j);
      col_mean[j] += t.at(i, j);
    }
  for (double& r : row_mean) r /= k;
  for (double& c : col_mean) c /= n;

  double ss_total = 0.0, ss_rows = 0.0, ss_cols = 0.0;
  for (int i = 0; i < n; ++i) ss_rows += (row_mean[i] - grand) * (row_mean[i] - grand);
  ss_rows *= k;
  for (int j = 0; j < k; ++j) ss_cols += (col_mean[j] - grand) * (col_mean[j] - grand);
  ss_cols *= n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) {
      const double d = t.at(i, j) - grand;
      ss_total += d * d;
    }
  detail::require(ss_total > 0.0, "icc_2_1: degenerate ratings (zero total variance)");
  const double ss_err = ss_total - ss_rows - ss_cols;

  const double ms_rows = ss_rows / (n - 1);
  const double ms_cols = ss_cols / (k - 1);
  const double ms_err = ss_err / (static_cast<double>(n - 1) * (k - 1));
  return (ms_rows - ms_err) /
         (ms_rows + (k - 1) * ms_err +
          (static_cast<double>(k) / n) * (ms_cols - ms_err));
}

inline double pearson_r(std::span<const double> x, std::span<const double> y) {
  detail::require(x.size() == y.size() && x.size() >= 2,
                  "pearson_r: series must have equal length >= 2");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  detail::require(sxx > 0.0 && syy > 0.0, "pearson_r: zero variance in a series");
  return sxy / std::sqrt(sxx * syy);
}

enum class R2Mode {
  ols,       // 1 - SS_res/SS_tot of the least-squares fit of measured on induced
  identity,  // residuals taken against the line measured == induced
};

inline double r_squared(std::span<const double> induced,
                        std::span<const double> measured, R2Mode mode = R2Mode::ols) {
  detail::require(induced.size() == measured.size() && induced.size() >= 2,
                  "r_squared: series must have equal length >= 2");
  const double n = static_cast<double>(induced.size());
  double mi = 0.0, mm = 0.0;
  for (std::size_t i = 0; i < induced.size(); ++i) {
    mi += induced[i];
    mm += measured[i];
  }
  mi /= n;
  mm /= n;
  double sii = 0.0, sim = 0.0, smm = 0.0;
  for (std::size_t i = 0; i < induced.size(); ++i) {
    const double di = induced[i] - mi, dm = measured[i] - mm;
    sii += di * di;
    sim += di * dm;
    smm += dm * dm;
  }
  detail::require(sii > 0.0, "r_squared: zero variance in the induced series");

  if (mode == R2Mode::ols) {
    // slope = sim/sii; SS_res = smm - sim^2/sii; R^2 = 1 - SS_res/SS_tot.
    if (smm == 0.0) return 0.0;  // constant measured series: the fit explains nothing
    return (sim * sim) / (sii * smm);
  }
  double ss_res = 0.0;
  for (std::size_t i = 0; i < induced.size(); ++i) {
    const double r = measured[i] - induced[i];
    ss_res += r * r;
  }
  detail::require(smm > 0.0,
                  "r_squared: zero variance in the measured series (identity mode)");
  return 1.0 - ss_res / smm;
}

} // namespace corthick
