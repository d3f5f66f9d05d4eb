#include <doctest.h>

#include "corthick/phantom.hpp"
#include "corthick/train.hpp"
#include "helpers.hpp"

using namespace corthick;

namespace {

UnetSpec tiny_spec() {
  UnetSpec s;
  s.pooling_steps = 1;
  s.base_features = 2;
  s.leaky_slope = 0.1;
  return s;
}

std::vector<TrainPair> slab_pairs(int count, std::uint64_t seed, int nz = 16) {
  PhantomSpec base;
  base.dims = {16, 16, nz};
  base.wm_extent_vox = 5.5;
  base.gm_thickness_mm = 3.0;
  std::vector<TrainPair> pairs;
  for (int i = 0; i < count; ++i) {
    PhantomSpec s = base;
    s.jitter_seed = seed + i;
    PhantomInstance inst = make_phantom(s);
    pairs.push_back({"slab" + std::to_string(i), std::move(inst.wm), std::move(inst.wmgm)});
  }
  return pairs;
}

TrainConfig quick_config(int epochs) {
  TrainConfig cfg;
  cfg.patch = 16;
  cfg.batch = 2;
  cfg.epochs = epochs;
  cfg.checkpoint_every = 5;
  cfg.seed = 2024;
  cfg.loss.lambda = 0.02;
  cfg.loss.integration.steps = 5;
  return cfg;
}

std::vector<TrainPair> dummy_val(int n) {
  std::vector<TrainPair> val;
  const GridMeta meta = make_meta(4, 4, 4);
  for (int i = 0; i < n; ++i)
    val.push_back({"v" + std::to_string(i), ScalarVolume(meta), ScalarVolume(meta)});
  return val;
}

} // namespace

TEST_SUITE_BEGIN("train");

TEST_CASE("zero epochs returns only the initialization checkpoint") {
  auto pairs = slab_pairs(2, 900);
  TrainConfig cfg = quick_config(0);
  auto checkpoints = train_amortized(pairs, {}, tiny_spec(), cfg);
  REQUIRE(checkpoints.size() == 1);
  CHECK(checkpoints[0].epoch == 0);
  CHECK_FALSE(checkpoints[0].icc.has_value());
}

TEST_CASE("training reduces the validation loss on a slab cohort") {
  auto train = slab_pairs(8, 910);
  auto val = slab_pairs(3, 990);
  TrainConfig cfg = quick_config(12);
  auto checkpoints = train_amortized(train, val, tiny_spec(), cfg);
  REQUIRE(checkpoints.size() >= 3);  // epochs 0, 1, 5, 10, 12
  const Checkpoint& first = checkpoints[1];
  REQUIRE(first.epoch == 1);
  const Checkpoint& last = checkpoints.back();
  CHECK(last.epoch == 12);
  CHECK(last.val_loss < first.val_loss);
  CHECK(last.val_loss < 0.75 * checkpoints[0].val_loss);
}

TEST_CASE("training is bit-reproducible under a fixed seed") {
  auto train = slab_pairs(4, 920);
  auto val = slab_pairs(2, 995);
  TrainConfig cfg = quick_config(3);
  auto a = train_amortized(train, val, tiny_spec(), cfg);
  auto b = train_amortized(train, val, tiny_spec(), cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t c = 0; c < a.size(); ++c) {
    CHECK(a[c].epoch == b[c].epoch);
    CHECK(a[c].val_loss == b[c].val_loss);
    REQUIRE(a[c].model.params.size() == b[c].model.params.size());
    for (std::size_t i = 0; i < a[c].model.params.size(); ++i)
      CHECK(a[c].model.params[i] == b[c].model.params[i]);
  }
}

TEST_CASE("volumes smaller than the patch are rejected") {
  auto pairs = slab_pairs(1, 930);
  TrainConfig cfg = quick_config(1);
  cfg.patch = 32;
  CHECK_THROWS_WITH_AS(train_amortized(pairs, {}, tiny_spec(), cfg),
                       doctest::Contains("patch"), std::runtime_error);
}

TEST_CASE("inference produces finite fields and integrates on any model") {
  UnetModel m = build_unet(tiny_spec(), 7);
  auto pairs = slab_pairs(1, 940, 18);  // 18 is not divisible by 2: padding path
  RegistrationResult r = infer_velocity(m, pairs[0].wm, pairs[0].wmgm);
  CHECK(r.velocity.meta.dims == pairs[0].wm.meta.dims);
  CHECK(r.velocity.finite());
  CHECK(r.phi.finite());
  CHECK(r.phi_neg.finite());
  CHECK(r.iterations == 0);
}

TEST_CASE("select_model returns a single checkpoint unconditionally") {
  std::vector<Checkpoint> ckpts(1);
  ckpts[0].model = build_unet(tiny_spec(), 3);
  ckpts[0].epoch = 4;
  auto val = dummy_val(3);
  // Degenerate evaluators (all zeros) would make the metric unavailable, but
  // a lone checkpoint is still returned.
  auto res = select_model(ckpts, val, {}, {},
                          [](const UnetModel&, const TrainPair&) { return 0.0; },
                          [](const TrainPair&) { return 0.0; });
  CHECK(res.index == 0);
}

TEST_CASE("select_model prefers exact agreement over a permuted assignment") {
  const std::vector<double> oracle = {2.0, 2.5, 3.0, 3.5, 4.0};
  const std::vector<double> permuted = {3.5, 4.0, 2.0, 3.0, 2.5};
  std::vector<Checkpoint> ckpts(2);
  ckpts[0].model = build_unet(tiny_spec(), 5);
  ckpts[0].epoch = 1;  // reproduces the oracle exactly
  ckpts[1].model = build_unet(tiny_spec(), 6);
  ckpts[1].epoch = 2;  // thickness assignments shuffled across subjects
  auto val = dummy_val(5);

  auto model_cth = [&](const UnetModel& m, const TrainPair& p) {
    const std::size_t subject = static_cast<std::size_t>(p.id.back() - '0');
    const bool is_first = m.params == ckpts[0].model.params;
    return is_first ? oracle[subject] : permuted[subject];
  };
  auto oracle_cth = [&](const TrainPair& p) {
    return oracle[static_cast<std::size_t>(p.id.back() - '0')];
  };
  auto res = select_model(ckpts, val, {}, {}, model_cth, oracle_cth);
  CHECK(res.index == 0);
  CHECK(res.icc == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(res.scores[1].has_value());
  CHECK(*res.scores[1] < res.icc);
}

TEST_CASE("select_model breaks ties toward the later epoch") {
  std::vector<Checkpoint> ckpts(2);
  ckpts[0].model = build_unet(tiny_spec(), 5);
  ckpts[0].epoch = 1;
  ckpts[1].model = build_unet(tiny_spec(), 6);
  ckpts[1].epoch = 9;
  auto val = dummy_val(4);
  const std::vector<double> oracle = {1.0, 2.0, 3.0, 4.0};
  auto evaluate = [&](const UnetModel&, const TrainPair& p) {
    return oracle[static_cast<std::size_t>(p.id.back() - '0')];
  };
  auto oracle_cth = [&](const TrainPair& p) {
    return oracle[static_cast<std::size_t>(p.id.back() - '0')];
  };
  auto res = select_model(ckpts, val, {}, {}, evaluate, oracle_cth);
  CHECK(res.index == 1);  // both score ICC=1; the later epoch wins
}

TEST_CASE("select_model needs at least two validation subjects") {
  std::vector<Checkpoint> ckpts(2);
  ckpts[0].model = build_unet(tiny_spec(), 5);
  ckpts[1].model = build_unet(tiny_spec(), 6);
  CHECK_THROWS(select_model(ckpts, dummy_val(1)));
}

TEST_CASE("select_model reports when every checkpoint is degenerate") {
  std::vector<Checkpoint> ckpts(2);
  ckpts[0].model = build_unet(tiny_spec(), 5);
  ckpts[0].epoch = 1;
  ckpts[1].model = build_unet(tiny_spec(), 6);
  ckpts[1].epoch = 2;
  auto val = dummy_val(3);
  auto flat = [](const UnetModel&, const TrainPair&) { return 1.0; };
  auto flat_oracle = [](const TrainPair&) { return 1.0; };
  CHECK_THROWS_WITH_AS(select_model(ckpts, val, {}, {}, flat, flat_oracle),
                       doctest::Contains("degenerate"), std::runtime_error);
}

TEST_SUITE_END();
