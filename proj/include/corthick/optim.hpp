// optim.hpp - Adam and the iterative per-pair registration driver.
//
// register_iterative optimizes the velocity field directly under the
// bidirectional objective. It is the in-repo oracle the amortized regressor
// is measured against, and is fully deterministic: no RNG, fixed iteration
// order.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "corthick/filters.hpp"
#include "corthick/grid.hpp"
#include "corthick/loss.hpp"

namespace corthick {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct AdamState {
  AdamConfig cfg;
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment
  std::int64_t step = 0;

  explicit AdamState(std::size_t n_params = 0, AdamConfig c = {})
      : cfg(c), m(n_params, 0.0), v(n_params, 0.0) {}
};

// Bias-corrected Adam with decoupled weight decay applied before the moment
// update: params <- params * (1 - lr * wd).
inline void adam_step(std::span<double> params, std::span<const double> grads,
                      AdamState& state) {
  detail::require(params.size() == grads.size() &&
                      params.size() == state.m.size() && params.size() == state.v.size(),
                  "adam_step: parameter/gradient/state shapes differ");
  for (std::size_t i = 0; i < grads.size(); ++i)
    detail::require(std::isfinite(grads[i]),
                    "adam_step: non-finite gradient at index " + std::to_string(i));
  const AdamConfig& c = state.cfg;
  state.step += 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const double decay = 1.0 - c.lr * c.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    double p = params[i] * decay;
    const double g = grads[i];
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] = p - c.lr * mhat / (std::sqrt(vhat) + c.eps);
  }
}

struct IterativeConfig {
  int max_iters = 250;
  double lr = 0.05;          // velocity is in voxel units; larger than network lr
  LossConfig loss{};
  double tol = 1e-4;         // relative loss change over the window
  int window = 10;           // Adam oscillates step to step; compare across a window
  int grad_smooth_passes = 0;  // binomial smoothing of the gradient, 0 = off

  void validate() const {
    detail::require(max_iters >= 1, "IterativeConfig.max_iters must be >= 1");
    detail::require(std::isfinite(tol) && tol > 0.0,
                    "IterativeConfig.tol must be > 0");
    detail::require(window >= 1, "IterativeConfig.window must be >= 1");
    detail::require(grad_smooth_passes >= 0,
                    "IterativeConfig.grad_smooth_passes must be >= 0");
    loss.validate();
  }
};

struct RegistrationResult {
  VectorField velocity;
  VectorField phi;      // forward displacement (moves WM toward WM+GM)
  VectorField phi_neg;  // reverse displacement (moves WM+GM toward WM)
  LossBreakdown final_loss;
  std::vector<double> loss_history;  // total loss per iteration
  int iterations = 0;
  double seconds = 0.0;  // wall clock; diagnostic only, never serialized
};

inline RegistrationResult register_iterative(const ScalarVolume& wm,
                                             const ScalarVolume& wmgm,
                                             const IterativeConfig& cfg = {}) {
  cfg.validate();
  detail::require(wm.meta.dims == wmgm.meta.dims,
                  "register_iterative: input dims differ");
  const auto t0 = std::chrono::steady_clock::now();

  VectorField z(wm.meta);
  AdamState adam(z.flat_size(), AdamConfig{cfg.lr, 0.9, 0.999, 1e-8, 0.0});
  RegistrationResult result;
  int iters = 0;
  for (int it = 0; it < cfg.max_iters; ++it) {
    auto [bd, g_z] = bidirectional_loss(wm, wmgm, z, cfg.loss);
    detail::require(bd.finite(), "register_iterative: loss diverged (non-finite) at "
                                 "iteration " + std::to_string(it));
    iters = it + 1;
    result.loss_history.push_back(bd.total);
    if (static_cast<int>(result.loss_history.size()) > cfg.window) {
      const double prev = result.loss_history[result.loss_history.size() - 1 - cfg.window];
      const double rel = std::abs(prev - bd.total) / std::max(std::abs(prev), 1e-12);
      if (rel < cfg.tol) break;
    }
    if (cfg.grad_smooth_passes > 0)
      g_z = binomial_smooth(g_z, cfg.grad_smooth_passes);
    adam_step(std::span<double>(z.flat(), z.flat_size()),
              std::span<const double>(g_z.flat(), g_z.flat_size()), adam);
  }

  result.velocity = std::move(z);
  result.phi = integrate_svf_notape(result.velocity, cfg.loss.integration);
  result.phi_neg = integrate_svf_notape(negated(result.velocity), cfg.loss.integration);
  result.final_loss =
      bidirectional_loss_value(wm, wmgm, result.velocity, cfg.loss);
  result.iterations = iters;
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

} // namespace corthick
