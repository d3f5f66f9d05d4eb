// train.hpp - unsupervised amortized training, inference, model selection.
//
// Training is fully unsupervised with respect to thickness: the objective is
// the bidirectional registration loss alone. Model selection happens after
// the fact, by agreement (ICC(2,1)) of mean global thickness against the
// iterative per-pair optimizer on held-out validation subjects. Everything
// runs from one RNG seed and is bit-reproducible.

#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "corthick/loss.hpp"
#include "corthick/metrics.hpp"
#include "corthick/optim.hpp"
#include "corthick/thickness.hpp"
#include "corthick/unet.hpp"

namespace corthick {

struct TrainPair {
  std::string id;
  ScalarVolume wm;
  ScalarVolume wmgm;
};

struct TrainConfig {
  int patch = 32;
  int batch = 2;
  double lr = 1e-3;
  double weight_decay = 1e-5;
  LossConfig loss{};
  int epochs = 50;
  int checkpoint_every = 5;
  std::uint64_t seed = 17;
  bool compute_icc = false;  // per-checkpoint agreement against the oracle (slow)
  IterativeConfig oracle{};
  GwiThresholds thresholds{};

  void validate(const UnetSpec& spec) const {
    spec.validate();
    detail::require(patch >= spec.divisor() && patch % spec.divisor() == 0,
                    "TrainConfig.patch must be a positive multiple of 2^pooling_steps");
    detail::require(batch >= 1, "TrainConfig.batch must be >= 1");
    detail::require(epochs >= 0, "TrainConfig.epochs must be >= 0");
    detail::require(checkpoint_every >= 1, "TrainConfig.checkpoint_every must be >= 1");
    loss.validate();
  }
};

struct Checkpoint {
  UnetModel model;
  int epoch = 0;
  double val_loss = 0.0;
  std::optional<double> icc;  // unavailable unless computed and non-degenerate
};

// Mean thickness over the gray-white interface of a (wm, wmgm) pair under a
// reverse displacement field. Returns 0 when the interface is empty.
inline double mean_gwi_thickness_mm(const ScalarVolume& wm, const ScalarVolume& wmgm,
                                    const VectorField& phi_neg,
                                    const GwiThresholds& thr = {}) {
  ScalarVolume gm(wm.meta);
  for (std::size_t i = 0; i < gm.data.size(); ++i)
    gm.data[i] = std::max(0.0, wmgm.data[i] - wm.data[i]);
  const GwiMask mask = extract_gwi(wm, gm, thr);
  const ScalarVolume t = thickness_map(phi_neg, mask);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < t.data.size(); ++i)
    if (mask.mask[i]) {
      sum += t.data[i];
      n += 1;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

// Single-pass inference: regress z, integrate both directions. Inputs whose
// dims are not divisible by 2^pooling_steps are zero-padded for the network
// and the velocity field is cropped back to the original grid.
inline RegistrationResult infer_velocity(const UnetModel& model, const ScalarVolume& wm,
                                         const ScalarVolume& wmgm,
                                         const IntegrationConfig& integration = {},
                                         const LossConfig* diagnostics = nullptr) {
  detail::require(wm.meta.dims == wmgm.meta.dims, "infer_velocity: input dims differ");
  const auto t0 = std::chrono::steady_clock::now();
  const int div = model.spec.divisor();
  std::array<int, 3> padded{};
  bool needs_pad = false;
  for (int a = 0; a < 3; ++a) {
    padded[a] = ((wm.meta.dims[a] + div - 1) / div) * div;
    needs_pad |= padded[a] != wm.meta.dims[a];
  }

  VectorField z(wm.meta);
  if (!needs_pad) {
    auto [zz, tape] = unet_forward(model, wm, wmgm);
    z = std::move(zz);
  } else {
    GridMeta pmeta;
    pmeta.dims = padded;
    pmeta.spacing_mm = wm.meta.spacing_mm;
    ScalarVolume pwm(pmeta), pwmgm(pmeta);
    for (int zz = 0; zz < wm.meta.nz(); ++zz)
      for (int yy = 0; yy < wm.meta.ny(); ++yy)
        for (int xx = 0; xx < wm.meta.nx(); ++xx) {
          pwm.at(xx, yy, zz) = wm.at(xx, yy, zz);
          pwmgm.at(xx, yy, zz) = wmgm.at(xx, yy, zz);
        }
    auto [pz, tape] = unet_forward(model, pwm, pwmgm);
    for (int zz = 0; zz < wm.meta.nz(); ++zz)
      for (int yy = 0; yy < wm.meta.ny(); ++yy)
        for (int xx = 0; xx < wm.meta.nx(); ++xx)
          z.at(xx, yy, zz) = pz.at(xx, yy, zz);
  }

  RegistrationResult result;
  result.phi = integrate_svf_notape(z, integration);
  result.phi_neg = integrate_svf_notape(negated(z), integration);
  result.velocity = std::move(z);
  if (diagnostics)
    result.final_loss = bidirectional_loss_value(wm, wmgm, result.velocity, *diagnostics);
  result.iterations = 0;
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

namespace detail {

inline ScalarVolume crop(const ScalarVolume& v, int ox, int oy, int oz, int size) {
  GridMeta meta = v.meta;
  meta.dims = {size, size, size};
  ScalarVolume out(meta);
  for (int z = 0; z < size; ++z)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        out.at(x, y, z) = v.at(ox + x, oy + y, oz + z);
  return out;
}

inline double validation_loss(const UnetModel& model, const std::vector<TrainPair>& val,
                              const LossConfig& loss) {
  if (val.empty()) return 0.0;
  double acc = 0.0;
  for (const TrainPair& p : val) {
    auto [z, tape] = unet_forward(model, p.wm, p.wmgm);
    acc += bidirectional_loss_value(p.wm, p.wmgm, z, loss).total;
  }
  return acc / static_cast<double>(val.size());
}

inline std::optional<double> checkpoint_icc(const UnetModel& model,
                                            const std::vector<TrainPair>& val,
                                            const std::vector<double>& oracle_cth,
                                            const LossConfig& loss,
                                            const GwiThresholds& thr) {
  if (val.size() < 2) return std::nullopt;
  RatingsTable table;
  table.n = static_cast<int>(val.size());
  table.k = 2;
  for (std::size_t i = 0; i < val.size(); ++i) {
    RegistrationResult r = infer_velocity(model, val[i].wm, val[i].wmgm, loss.integration);
    table.values.push_back(mean_gwi_thickness_mm(val[i].wm, val[i].wmgm, r.phi_neg, thr));
    table.values.push_back(oracle_cth[i]);
  }
  try {
    return icc_2_1(table);
  } catch (const std::exception&) {
    return std::nullopt;  // degenerate ratings: metric unavailable
  }
}

} // namespace detail

inline std::vector<Checkpoint> train_amortized(const std::vector<TrainPair>& train_pairs,
                                               const std::vector<TrainPair>& val_pairs,
                                               const UnetSpec& spec,
                                               const TrainConfig& cfg) {
  cfg.validate(spec);
  detail::require(!train_pairs.empty(), "train_amortized: empty training set");
  for (const TrainPair& p : train_pairs) {
    detail::require(p.wm.meta.dims == p.wmgm.meta.dims,
                    "train_amortized: pair " + p.id + " has mismatched dims");
    for (int a = 0; a < 3; ++a)
      detail::require(p.wm.meta.dims[a] >= cfg.patch,
                      "train_amortized: pair " + p.id + " smaller than the patch size");
  }
  for (const TrainPair& p : val_pairs)
    for (int a = 0; a < 3; ++a)
      detail::require(p.wm.meta.dims[a] % spec.divisor() == 0,
                      "train_amortized: validation pair " + p.id +
                          " dims must be divisible by 2^pooling_steps");

  UnetModel model = build_unet(spec, cfg.seed);
  AdamState adam(model.params.size(),
                 AdamConfig{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

  std::vector<double> oracle_cth;
  if (cfg.compute_icc && val_pairs.size() >= 2) {
    for (const TrainPair& p : val_pairs) {
      RegistrationResult r = register_iterative(p.wm, p.wmgm, cfg.oracle);
      oracle_cth.push_back(
          mean_gwi_thickness_mm(p.wm, p.wmgm, r.phi_neg, cfg.thresholds));
    }
  }

  std::vector<Checkpoint> checkpoints;
  auto emit = [&](int epoch) {
    Checkpoint c;
    c.model = model;
    c.epoch = epoch;
    c.val_loss = detail::validation_loss(model, val_pairs, cfg.loss);
    if (cfg.compute_icc)
      c.icc = detail::checkpoint_icc(model, val_pairs, oracle_cth, cfg.loss,
                                     cfg.thresholds);
    checkpoints.push_back(std::move(c));
  };
  emit(0);  // initialization checkpoint

  std::vector<std::size_t> order(train_pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> grad_acc(model.params.size(), 0.0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t cursor = 0;
    while (cursor < order.size()) {
      const std::size_t group = std::min<std::size_t>(cfg.batch, order.size() - cursor);
      std::fill(grad_acc.begin(), grad_acc.end(), 0.0);
      for (std::size_t b = 0; b < group; ++b) {
        const TrainPair& pair = train_pairs[order[cursor + b]];
        int origin[3];
        for (int a = 0; a < 3; ++a) {
          const int span = pair.wm.meta.dims[a] - cfg.patch;
          origin[a] = span == 0
                          ? 0
                          : static_cast<int>(rng() % static_cast<std::uint64_t>(span + 1));
        }
        ScalarVolume wm_p =
            detail::crop(pair.wm, origin[0], origin[1], origin[2], cfg.patch);
        ScalarVolume wmgm_p =
            detail::crop(pair.wmgm, origin[0], origin[1], origin[2], cfg.patch);
        auto [z, tape] = unet_forward(model, wm_p, wmgm_p);
        auto [bd, g_z] = bidirectional_loss(wm_p, wmgm_p, z, cfg.loss);
        detail::require(bd.finite(),
                        "train_amortized: non-finite loss at epoch " +
                            std::to_string(epoch) + " on pair " + pair.id);
        UnetGrads grads = unet_backward(model, tape, g_z);
        for (std::size_t i = 0; i < grad_acc.size(); ++i)
          grad_acc[i] += grads.params[i];
      }
      const double inv = 1.0 / static_cast<double>(group);
      for (double& g : grad_acc) g *= inv;
      adam_step(model.params, grad_acc, adam);
      cursor += group;
    }
    if (epoch == 1 || epoch == cfg.epochs || epoch % cfg.checkpoint_every == 0)
      emit(epoch);
  }
  return checkpoints;
}

struct SelectionResult {
  std::size_t index = 0;
  double icc = 0.0;
  std::vector<std::optional<double>> scores;  // per checkpoint; nullopt = skipped
};

using ModelThicknessFn = std::function<double(const UnetModel&, const TrainPair&)>;
using OracleThicknessFn = std::function<double(const TrainPair&)>;

// Picks the checkpoint whose mean global thickness agrees best (ICC(2,1))
// with the iterative oracle on the validation subjects. Checkpoints with a
// degenerate agreement table are marked unavailable and skipped; ties break
// toward the later epoch. The evaluator hooks default to the real pipelines.
inline SelectionResult select_model(const std::vector<Checkpoint>& checkpoints,
                                    const std::vector<TrainPair>& val_pairs,
                                    const IterativeConfig& oracle_cfg = {},
                                    const GwiThresholds& thresholds = {},
                                    ModelThicknessFn model_cth = {},
                                    OracleThicknessFn oracle_cth = {}) {
  detail::require(!checkpoints.empty(), "select_model: no checkpoints");
  detail::require(val_pairs.size() >= 2,
                  "select_model: need at least 2 validation subjects");
  if (!model_cth) {
    model_cth = [&oracle_cfg, &thresholds](const UnetModel& m, const TrainPair& p) {
      RegistrationResult r = infer_velocity(m, p.wm, p.wmgm, oracle_cfg.loss.integration);
      return mean_gwi_thickness_mm(p.wm, p.wmgm, r.phi_neg, thresholds);
    };
  }
  if (!oracle_cth) {
    oracle_cth = [&oracle_cfg, &thresholds](const TrainPair& p) {
      RegistrationResult r = register_iterative(p.wm, p.wmgm, oracle_cfg);
      return mean_gwi_thickness_mm(p.wm, p.wmgm, r.phi_neg, thresholds);
    };
  }

  std::vector<double> oracle(val_pairs.size());
  for (std::size_t i = 0; i < val_pairs.size(); ++i) oracle[i] = oracle_cth(val_pairs[i]);

  SelectionResult result;
  if (checkpoints.size() == 1) {  // returned unconditionally
    result.index = 0;
    result.scores.resize(1);
    RatingsTable table;
    table.n = static_cast<int>(val_pairs.size());
    table.k = 2;
    for (std::size_t i = 0; i < val_pairs.size(); ++i) {
      table.values.push_back(model_cth(checkpoints[0].model, val_pairs[i]));
      table.values.push_back(oracle[i]);
    }
    try {
      result.icc = icc_2_1(table);
      result.scores[0] = result.icc;
    } catch (const std::exception&) {
    }
    return result;
  }

  bool found = false;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    RatingsTable table;
    table.n = static_cast<int>(val_pairs.size());
    table.k = 2;
    for (std::size_t i = 0; i < val_pairs.size(); ++i) {
      table.values.push_back(model_cth(checkpoints[c].model, val_pairs[i]));
      table.values.push_back(oracle[i]);
    }
    std::optional<double> icc;
    try {
      icc = icc_2_1(table);
    } catch (const std::exception&) {
      icc = std::nullopt;
    }
    result.scores.push_back(icc);
    if (!icc) continue;
    const bool better =
        !found || *icc > result.icc ||
        (*icc == result.icc && checkpoints[c].epoch >= checkpoints[result.index].epoch);
    if (better) {
      result.index = c;
      result.icc = *icc;
      found = true;
    }
  }
  detail::require(found, "select_model: every checkpoint had a degenerate agreement "
                         "table; no model selectable");
  return result;
}

} // namespace corthick
