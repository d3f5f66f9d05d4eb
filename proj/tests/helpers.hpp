// Shared test utilities: seeded random volumes/fields, smooth test fields,
// and the central finite-difference gradient checker used throughout the
// gradient-correctness suites.

#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "corthick/filters.hpp"
#include "corthick/grid.hpp"

namespace corthick::testing {

// Random scalar volume with values quantized through float32, so that MVOL
// round trips are exactly representable.
inline ScalarVolume random_volume(const GridMeta& meta, std::uint64_t seed,
                                  double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  ScalarVolume v(meta);
  for (double& x : v.data) x = static_cast<double>(static_cast<float>(dist(rng)));
  return v;
}

inline VectorField random_field(const GridMeta& meta, std::uint64_t seed,
                                double amplitude = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  VectorField f(meta);
  for (Vec3& v : f.data) {
    v.x = dist(rng);
    v.y = dist(rng);
    v.z = dist(rng);
  }
  return f;
}

// White noise smoothed by a few binomial passes and rescaled to a max-norm,
// the "smooth random field" used by the diffeomorphism property tests.
inline VectorField smooth_random_field(const GridMeta& meta, std::uint64_t seed,
                                       double max_norm = 0.5, int passes = 3) {
  VectorField f = random_field(meta, seed, 1.0);
  f = binomial_smooth(f, passes);
  double peak = 0.0;
  for (const Vec3& v : f.data)
    peak = std::max({peak, std::abs(v.x), std::abs(v.y), std::abs(v.z)});
  if (peak > 0.0) {
    const double s = max_norm / peak;
    for (Vec3& v : f.data) v *= s;
  }
  return f;
}

// Central finite differences of a scalar functional, compared against an
// analytic gradient. Relative error per component uses a mixed denominator:
// max(|fd_i|, 1e-3 * max_j |fd_j|, atol) so negligible components cannot
// dominate. Returns the worst relative error.
struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

inline GradCheckResult check_gradient(std::function<double(const std::vector<double>&)> f,
                                      std::vector<double> x,
                                      const std::vector<double>& analytic_grad,
                                      double step = 1e-3, double atol = 1e-9) {
  GradCheckResult res;
  double fd_peak = 0.0;
  std::vector<double> fd(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + step;
    const double fp = f(x);
    x[i] = keep - step;
    const double fm = f(x);
    x[i] = keep;
    fd[i] = (fp - fm) / (2.0 * step);
    fd_peak = std::max(fd_peak, std::abs(fd[i]));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double denom = std::max({std::abs(fd[i]), 1e-3 * fd_peak, atol});
    const double rel = std::abs(analytic_grad[i] - fd[i]) / denom;
    if (rel > res.max_rel_err) {
      res.max_rel_err = rel;
      res.worst_index = i;
      res.analytic = analytic_grad[i];
      res.numeric = fd[i];
    }
  }
  return res;
}

} // namespace corthick::testing
