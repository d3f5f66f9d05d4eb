// corthick - cortical thickness from partial-volume segmentations by
// diffeomorphic registration with stationary velocity fields.
//
// Subcommands:
//   phantom    generate a synthetic atrophy cohort with exact ground truth
//   register   iterative per-pair registration + thickness report
//   train      unsupervised amortized regressor on a cohort manifest
//   thickness  single-pass inference with a trained checkpoint
//   eval       agreement / atrophy-sensitivity statistics over result tables
//   bench      wall-clock comparison of iterative vs amortized on one pair
//
// A JSON config file (--config) supplies defaults; explicit flags override
// it. Unknown config keys are rejected.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "corthick/io.hpp"
#include "corthick/manifest.hpp"
#include "corthick/metrics.hpp"
#include "corthick/optim.hpp"
#include "corthick/phantom.hpp"
#include "corthick/thickness.hpp"
#include "corthick/train.hpp"
#include "corthick/unet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace corthick;

namespace {

// ---------------------------------------------------------------------------
// Declarative configuration with strict key checking.

struct PipelineConfig {
  std::uint64_t seed = 17;
  LossConfig loss{};
  IterativeConfig iterative{};
  UnetSpec spec{};
  TrainConfig train{};
  GwiThresholds thresholds{};
  int val_count = 2;
};

void reject_unknown(const json& j, const std::string& section,
                    std::initializer_list<const char*> known) {
  for (auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* k : known) ok |= key == k;
    if (!ok)
      throw std::runtime_error("config: unknown key \"" + key + "\" in " + section);
  }
}

PipelineConfig load_config(const std::string& path) {
  PipelineConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in.good()) throw std::runtime_error("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + std::string(e.what()));
  }
  reject_unknown(j, "top level", {"seed", "loss", "iterative", "train", "thickness"});
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("loss")) {
    const json& l = j["loss"];
    reject_unknown(l, "loss", {"similarity", "lambda", "steps", "allow_lambda_outside_range"});
    if (l.contains("similarity"))
      cfg.loss.similarity = similarity_from_string(l["similarity"].get<std::string>());
    cfg.loss.lambda = l.value("lambda", cfg.loss.lambda);
    cfg.loss.integration.steps = l.value("steps", cfg.loss.integration.steps);
    cfg.loss.allow_lambda_outside_range =
        l.value("allow_lambda_outside_range", cfg.loss.allow_lambda_outside_range);
  }
  if (j.contains("iterative")) {
    const json& it = j["iterative"];
    reject_unknown(it, "iterative",
                   {"max_iters", "lr", "tol", "window", "grad_smooth_passes"});
    cfg.iterative.max_iters = it.value("max_iters", cfg.iterative.max_iters);
    cfg.iterative.lr = it.value("lr", cfg.iterative.lr);
    cfg.iterative.tol = it.value("tol", cfg.iterative.tol);
    cfg.iterative.window = it.value("window", cfg.iterative.window);
    cfg.iterative.grad_smooth_passes =
        it.value("grad_smooth_passes", cfg.iterative.grad_smooth_passes);
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    reject_unknown(t, "train",
                   {"patch", "batch", "lr", "weight_decay", "epochs", "checkpoint_every",
                    "features", "pooling", "leaky_slope", "val_count", "icc"});
    cfg.train.patch = t.value("patch", cfg.train.patch);
    cfg.train.batch = t.value("batch", cfg.train.batch);
    cfg.train.lr = t.value("lr", cfg.train.lr);
    cfg.train.weight_decay = t.value("weight_decay", cfg.train.weight_decay);
    cfg.train.epochs = t.value("epochs", cfg.train.epochs);
    cfg.train.checkpoint_every = t.value("checkpoint_every", cfg.train.checkpoint_every);
    cfg.spec.base_features = t.value("features", cfg.spec.base_features);
    cfg.spec.pooling_steps = t.value("pooling", cfg.spec.pooling_steps);
    cfg.spec.leaky_slope = t.value("leaky_slope", cfg.spec.leaky_slope);
    cfg.val_count = t.value("val_count", cfg.val_count);
    cfg.train.compute_icc = t.value("icc", cfg.train.compute_icc);
  }
  if (j.contains("thickness")) {
    const json& th = j["thickness"];
    reject_unknown(th, "thickness", {"wm_threshold", "gm_threshold"});
    cfg.thresholds.wm = th.value("wm_threshold", cfg.thresholds.wm);
    cfg.thresholds.gm = th.value("gm_threshold", cfg.thresholds.gm);
  }
  return cfg;
}

// ---------------------------------------------------------------------------

std::vector<double> parse_levels(const std::string& spec) {
  std::vector<double> levels;
  const auto colon1 = spec.find(':');
  if (colon1 != std::string::npos) {
    const auto colon2 = spec.find(':', colon1 + 1);
    if (colon2 == std::string::npos)
      throw std::runtime_error("levels: expected start:step:stop, got " + spec);
    const double start = std::stod(spec.substr(0, colon1));
    const double step = std::stod(spec.substr(colon1 + 1, colon2 - colon1 - 1));
    const double stop = std::stod(spec.substr(colon2 + 1));
    if (step <= 0.0) throw std::runtime_error("levels: step must be > 0");
    for (int i = 0;; ++i) {
      const double v = start + i * step;
      if (v > stop + 1e-9) break;
      levels.push_back(v);
    }
  } else {
    std::string cur;
    std::stringstream ss(spec);
    while (std::getline(ss, cur, ',')) levels.push_back(std::stod(cur));
  }
  return levels;
}

ThicknessReport make_report(const ScalarVolume& wm, const ScalarVolume& wmgm,
                            const VectorField& phi_neg, const LabelVolume* labels,
                            const GwiThresholds& thr) {
  ScalarVolume gm(wm.meta);
  for (std::size_t i = 0; i < gm.data.size(); ++i)
    gm.data[i] = std::max(0.0, wmgm.data[i] - wm.data[i]);
  GwiMask mask = extract_gwi(wm, gm, thr);
  ScalarVolume t = thickness_map(phi_neg, mask);
  LabelVolume all_one(wm.meta, 1);
  return regional_thickness(t, mask, labels ? *labels : all_one);
}

void write_pair_outputs(const fs::path& dir, const RegistrationResult& reg,
                        const ThicknessReport& rep, bool save_fields) {
  fs::create_directories(dir);
  if (save_fields) {
    store_field(reg.velocity, (dir / "velocity.mvol").string());
    store_field(reg.phi, (dir / "phi.mvol").string());
    store_field(reg.phi_neg, (dir / "phi_neg.mvol").string());
    store_volume(rep.thickness_mm, (dir / "thickness_mm.mvol").string());
  }
  write_report_csv(rep, (dir / "report.csv").string());
  write_report_json(rep, (dir / "report.json").string());
}

void print_report_summary(const ThicknessReport& rep, const RegistrationResult& reg) {
  std::printf("global mean thickness %.4f mm (std %.4f, %zu GWI voxels)\n",
              rep.global_mean_mm, rep.global_std_mm, rep.global_count);
  std::printf("iterations %d, final loss %.6g (sim %.6g + %.6g, smooth %.6g)\n",
              reg.iterations, reg.final_loss.total, reg.final_loss.sim_forward,
              reg.final_loss.sim_reverse, reg.final_loss.smooth);
}

struct PairFiles {
  ScalarVolume wm;
  ScalarVolume wmgm;
  std::unique_ptr<LabelVolume> labels;
};

PairFiles load_pair(const std::string& wm_path, const std::string& wmgm_path,
                    const std::string& labels_path) {
  PairFiles p;
  p.wm = load_scalar_volume(wm_path, ScalarKind::partial_volume);
  p.wmgm = load_scalar_volume(wmgm_path, ScalarKind::partial_volume);
  detail::require(p.wm.meta.dims == p.wmgm.meta.dims,
                  "wm and wmgm volumes have different dims");
  if (!labels_path.empty()) {
    p.labels = std::make_unique<LabelVolume>(load_label_volume(labels_path));
    detail::require(p.labels->meta.dims == p.wm.meta.dims,
                    "parcellation dims differ from the volumes");
  }
  return p;
}

// ---------------------------------------------------------------------------
// Subcommand implementations.

int cmd_phantom(const PipelineConfig& cfg, const std::string& out_dir, int subjects,
                const std::string& kind, int dim, const std::string& levels_spec,
                double gm_thickness, double wm_extent, double perturb_amplitude,
                double perturb_wavelength, std::uint64_t seed) {
  PhantomSpec base;
  base.kind = kind == "shell" ? PhantomKind::spherical_shell : PhantomKind::slab;
  base.dims = {dim, dim, dim};
  base.gm_thickness_mm = gm_thickness;
  base.wm_extent_vox = wm_extent > 0 ? wm_extent
                       : (base.kind == PhantomKind::slab ? 0.42 * dim : 0.27 * dim);
  base.perturb_amplitude_vox = perturb_amplitude;
  base.perturb_wavelength_vox = perturb_wavelength;
  const std::vector<double> levels = parse_levels(levels_spec);

  const std::vector<PhantomSpec> specs(static_cast<std::size_t>(subjects), base);
  const auto cohort = generate_cohort(specs, levels, seed);

  fs::create_directories(out_dir);
  std::vector<ManifestEntry> manifest;
  std::vector<int> level_index_per_subject(subjects, 0);
  for (const CohortEntry& e : cohort) {
    char tag[64];
    if (e.baseline)
      std::snprintf(tag, sizeof(tag), "sub%03d_base", e.subject);
    else
      std::snprintf(tag, sizeof(tag), "sub%03d_lvl%02d", e.subject,
                    ++level_index_per_subject[e.subject]);
    ManifestEntry m;
    m.subject = e.subject;
    m.atrophy_mm = e.atrophy_mm;
    m.baseline = e.baseline;
    m.wm_path = std::string(tag) + "_wm.mvol";
    m.wmgm_path = std::string(tag) + "_wmgm.mvol";
    m.labels_path = std::string(tag) + "_labels.mvol";
    m.gt_thickness_mm = e.gt_thickness_mm;
    store_volume(e.instance.wm, (fs::path(out_dir) / m.wm_path).string());
    store_volume(e.instance.wmgm, (fs::path(out_dir) / m.wmgm_path).string());
    store_labels(e.instance.parcellation, (fs::path(out_dir) / m.labels_path).string());
    manifest.push_back(std::move(m));
  }
  write_manifest(manifest, (fs::path(out_dir) / "manifest.csv").string());
  std::printf("wrote %zu instances (%d subjects) to %s\n", cohort.size(), subjects,
              out_dir.c_str());
  (void)cfg;
  return 0;
}

int cmd_register(const PipelineConfig& cfg, const std::string& wm_path,
                 const std::string& wmgm_path, const std::string& labels_path,
                 const std::string& manifest_path, const std::string& out_dir,
                 bool save_fields) {
  IterativeConfig reg_cfg = cfg.iterative;
  reg_cfg.loss = cfg.loss;
  if (!manifest_path.empty()) {
    const auto entries = read_manifest(manifest_path);
    fs::create_directories(out_dir);
    std::vector<ResultRow> rows;
    for (const ManifestEntry& e : entries) {
      PairFiles p = load_pair(e.wm_path, e.wmgm_path, e.labels_path);
      RegistrationResult reg = register_iterative(p.wm, p.wmgm, reg_cfg);
      ThicknessReport rep =
          make_report(p.wm, p.wmgm, reg.phi_neg, p.labels.get(), cfg.thresholds);
      ResultRow r;
      r.subject = e.subject;
      r.atrophy_mm = e.atrophy_mm;
      r.baseline = e.baseline;
      r.mean_mm = rep.global_mean_mm;
      r.std_mm = rep.global_std_mm;
      r.gwi_count = rep.global_count;
      rows.push_back(r);
      std::printf("subject %d atrophy %.3f: mean %.4f mm (%d iterations)\n", e.subject,
                  e.atrophy_mm, rep.global_mean_mm, reg.iterations);
    }
    write_results(rows, (fs::path(out_dir) / "results.csv").string());
    return 0;
  }
  PairFiles p = load_pair(wm_path, wmgm_path, labels_path);
  RegistrationResult reg = register_iterative(p.wm, p.wmgm, reg_cfg);
  ThicknessReport rep =
      make_report(p.wm, p.wmgm, reg.phi_neg, p.labels.get(), cfg.thresholds);
  write_pair_outputs(out_dir, reg, rep, save_fields);
  print_report_summary(rep, reg);
  return 0;
}

int cmd_train(const PipelineConfig& cfg, const std::string& manifest_path,
              const std::string& out_dir) {
  const auto entries = read_manifest(manifest_path);
  std::vector<int> subjects;
  for (const ManifestEntry& e : entries)
    if (std::find(subjects.begin(), subjects.end(), e.subject) == subjects.end())
      subjects.push_back(e.subject);
  detail::require(cfg.val_count >= 2, "train: val_count must be >= 2 for model selection");
  detail::require(static_cast<int>(subjects.size()) > cfg.val_count,
                  "train: need more subjects than val_count (" +
                      std::to_string(subjects.size()) + " subjects, val_count " +
                      std::to_string(cfg.val_count) + ")");
  std::vector<int> val_subjects(subjects.end() - cfg.val_count, subjects.end());
  auto is_val = [&](int s) {
    return std::find(val_subjects.begin(), val_subjects.end(), s) != val_subjects.end();
  };

  std::vector<TrainPair> train_pairs, val_pairs;
  for (const ManifestEntry& e : entries) {
    if (is_val(e.subject)) {
      if (e.baseline) {
        PairFiles p = load_pair(e.wm_path, e.wmgm_path, "");
        val_pairs.push_back({"sub" + std::to_string(e.subject), std::move(p.wm),
                             std::move(p.wmgm)});
      }
    } else {
      PairFiles p = load_pair(e.wm_path, e.wmgm_path, "");
      val_pairs.size();  // no-op; keeps the two branches parallel
      train_pairs.push_back({"sub" + std::to_string(e.subject) + "@" +
                                 detail::format_double(e.atrophy_mm),
                             std::move(p.wm), std::move(p.wmgm)});
    }
  }

  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  tc.loss = cfg.loss;
  tc.oracle = cfg.iterative;
  tc.oracle.loss = cfg.loss;
  tc.thresholds = cfg.thresholds;
  std::printf("training on %zu pairs, validating on %zu subjects\n", train_pairs.size(),
              val_pairs.size());
  const auto checkpoints = train_amortized(train_pairs, val_pairs, cfg.spec, tc);

  fs::create_directories(out_dir);
  std::ofstream log((fs::path(out_dir) / "train_log.csv").string(), std::ios::trunc);
  log << "epoch,val_loss,icc\n";
  for (const Checkpoint& c : checkpoints) {
    char name[64];
    std::snprintf(name, sizeof(name), "ckpt_epoch%04d.mnet", c.epoch);
    const double* icc = c.icc ? &*c.icc : nullptr;
    save_model(c.model, (fs::path(out_dir) / name).string(), c.epoch, c.val_loss, icc);
    log << c.epoch << ',' << detail::format_double(c.val_loss) << ','
        << (c.icc ? detail::format_double(*c.icc) : "") << '\n';
  }
  log.flush();

  IterativeConfig oracle_cfg = cfg.iterative;
  oracle_cfg.loss = cfg.loss;
  const SelectionResult sel =
      select_model(checkpoints, val_pairs, oracle_cfg, cfg.thresholds);
  const Checkpoint& best = checkpoints[sel.index];
  const double icc_value = sel.icc;
  save_model(best.model, (fs::path(out_dir) / "best.mnet").string(), best.epoch,
             best.val_loss, &icc_value);

  json selection;
  selection["best_epoch"] = best.epoch;
  selection["best_index"] = sel.index;
  selection["icc"] = sel.icc;
  selection["checkpoints"] = json::array();
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    json c;
    c["epoch"] = checkpoints[i].epoch;
    c["val_loss"] = checkpoints[i].val_loss;
    if (i < sel.scores.size() && sel.scores[i])
      c["icc"] = *sel.scores[i];
    else
      c["icc"] = nullptr;
    selection["checkpoints"].push_back(c);
  }
  std::ofstream sj((fs::path(out_dir) / "selection.json").string(), std::ios::trunc);
  sj << selection.dump(2) << '\n';
  std::printf("selected epoch %d (ICC %.4f); wrote %s/best.mnet\n", best.epoch, sel.icc,
              out_dir.c_str());
  return 0;
}

int cmd_thickness(const PipelineConfig& cfg, const std::string& model_path,
                  const std::string& wm_path, const std::string& wmgm_path,
                  const std::string& labels_path, const std::string& manifest_path,
                  const std::string& out_dir, bool save_fields) {
  const LoadedModel loaded = load_model(model_path);
  if (!manifest_path.empty()) {
    const auto entries = read_manifest(manifest_path);
    fs::create_directories(out_dir);
    std::vector<ResultRow> rows;
    for (const ManifestEntry& e : entries) {
      PairFiles p = load_pair(e.wm_path, e.wmgm_path, e.labels_path);
      RegistrationResult reg = infer_velocity(loaded.model, p.wm, p.wmgm,
                                              cfg.loss.integration, &cfg.loss);
      ThicknessReport rep =
          make_report(p.wm, p.wmgm, reg.phi_neg, p.labels.get(), cfg.thresholds);
      ResultRow r;
      r.subject = e.subject;
      r.atrophy_mm = e.atrophy_mm;
      r.baseline = e.baseline;
      r.mean_mm = rep.global_mean_mm;
      r.std_mm = rep.global_std_mm;
      r.gwi_count = rep.global_count;
      rows.push_back(r);
    }
    write_results(rows, (fs::path(out_dir) / "results.csv").string());
    std::printf("wrote %zu result rows to %s/results.csv\n", rows.size(), out_dir.c_str());
    return 0;
  }
  PairFiles p = load_pair(wm_path, wmgm_path, labels_path);
  RegistrationResult reg =
      infer_velocity(loaded.model, p.wm, p.wmgm, cfg.loss.integration, &cfg.loss);
  ThicknessReport rep =
      make_report(p.wm, p.wmgm, reg.phi_neg, p.labels.get(), cfg.thresholds);
  write_pair_outputs(out_dir, reg, rep, save_fields);
  print_report_summary(rep, reg);
  return 0;
}

int cmd_eval(const std::string& mode, const std::string& results_path,
             const std::string& a_path, const std::string& b_path,
             const std::string& r2_mode, const std::string& out_path) {
  json report = json::array();
  if (mode == "atrophy") {
    const auto rows = read_results(results_path);
    const AtrophyPairs pairs = atrophy_pairs(rows);
    const R2Mode r2m = r2_mode == "identity" ? R2Mode::identity : R2Mode::ols;
    report.push_back({{"metric", "r_squared"},
                      {"value", r_squared(pairs.induced_mm, pairs.measured_mm, r2m)},
                      {"n", pairs.induced_mm.size()},
                      {"k", 1}});
    report.push_back({{"metric", "pearson_r"},
                      {"value", pearson_r(pairs.induced_mm, pairs.measured_mm)},
                      {"n", pairs.induced_mm.size()},
                      {"k", 1}});
    report.push_back(
        {{"metric", "monotone_fraction"},
         {"value", pairs.comparable_pairs
                       ? static_cast<double>(pairs.monotone_pairs) / pairs.comparable_pairs
                       : 0.0},
         {"n", pairs.comparable_pairs},
         {"k", 1}});
  } else if (mode == "agreement") {
    const auto rows_a = read_results(a_path);
    const auto rows_b = read_results(b_path);
    detail::require(rows_a.size() == rows_b.size(),
                    "agreement: result tables have different row counts");
    RatingsTable table;
    table.n = static_cast<int>(rows_a.size());
    table.k = 2;
    std::vector<double> xa, xb;
    for (std::size_t i = 0; i < rows_a.size(); ++i) {
      detail::require(rows_a[i].subject == rows_b[i].subject &&
                          rows_a[i].atrophy_mm == rows_b[i].atrophy_mm,
                      "agreement: row " + std::to_string(i) +
                          " does not describe the same instance in both tables");
      table.values.push_back(rows_a[i].mean_mm);
      table.values.push_back(rows_b[i].mean_mm);
      xa.push_back(rows_a[i].mean_mm);
      xb.push_back(rows_b[i].mean_mm);
    }
    report.push_back({{"metric", "icc_2_1"},
                      {"value", icc_2_1(table)},
                      {"n", table.n},
                      {"k", table.k}});
    report.push_back(
        {{"metric", "pearson_r"}, {"value", pearson_r(xa, xb)}, {"n", table.n}, {"k", 2}});
  } else {
    throw std::runtime_error("eval: mode must be \"atrophy\" or \"agreement\"");
  }
  const std::string text = report.dump(2);
  std::printf("%s\n", text.c_str());
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::trunc);
    out << text << '\n';
    detail::require(out.good(), "write failure: " + out_path);
  }
  return 0;
}

int cmd_bench(const PipelineConfig& cfg, const std::string& wm_path,
              const std::string& wmgm_path, const std::string& model_path,
              int iters, const std::string& out_path) {
  PairFiles p = load_pair(wm_path, wmgm_path, "");
  UnetModel model = model_path.empty() ? build_unet(cfg.spec, cfg.seed)
                                       : load_model(model_path).model;

  IterativeConfig it = cfg.iterative;
  it.loss = cfg.loss;
  if (iters > 0) it.max_iters = iters;
  it.tol = 1e-300;  // run the full iteration budget for an honest wall clock
  const auto t0 = std::chrono::steady_clock::now();
  RegistrationResult reg = register_iterative(p.wm, p.wmgm, it);
  const double iterative_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto t1 = std::chrono::steady_clock::now();
  RegistrationResult inf = infer_velocity(model, p.wm, p.wmgm, cfg.loss.integration);
  const double amortized_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();

  json rep;
  rep["dims"] = {p.wm.meta.nx(), p.wm.meta.ny(), p.wm.meta.nz()};
  rep["iterations"] = reg.iterations;
  rep["iterative_seconds"] = iterative_s;
  rep["amortized_seconds"] = amortized_s;
  rep["speedup"] = iterative_s / amortized_s;
  const std::string text = rep.dump(2);
  std::printf("%s\n", text.c_str());
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::trunc);
    out << text << '\n';
    detail::require(out.good(), "write failure: " + out_path);
  }
  (void)inf;
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"cortical thickness via diffeomorphic velocity-field registration"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --config appear after the subcommand name

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags override it)");

  // phantom
  auto* sp = app.add_subcommand("phantom", "generate a synthetic atrophy cohort");
  std::string p_out, p_kind = "slab", p_levels = "0:0.1:1.0";
  int p_subjects = 10, p_dim = 32;
  double p_gm = 3.0, p_extent = -1.0, p_amp = 0.0, p_wave = 8.0;
  std::uint64_t p_seed = 0;
  bool p_seed_set = false;
  sp->add_option("--out", p_out, "output directory")->required();
  sp->add_option("--subjects", p_subjects, "number of subjects");
  sp->add_option("--kind", p_kind, "slab|shell")->check(CLI::IsMember({"slab", "shell"}));
  sp->add_option("--dim", p_dim, "cubic grid extent in voxels");
  sp->add_option("--levels", p_levels, "atrophy levels in mm: start:step:stop or a,b,c");
  sp->add_option("--gm-thickness-mm", p_gm, "gray band thickness in mm");
  sp->add_option("--wm-extent", p_extent, "WM extent in voxels (default scales with dim)");
  sp->add_option("--perturb-amplitude", p_amp, "sinusoidal interface amplitude (voxels)");
  sp->add_option("--perturb-wavelength", p_wave, "sinusoidal interface wavelength (voxels)");
  sp->add_option("--seed", p_seed, "cohort jitter seed")->each([&](const std::string&) {
    p_seed_set = true;
  });

  // register
  auto* sr = app.add_subcommand("register", "iterative SVF registration + thickness");
  std::string r_wm, r_wmgm, r_labels, r_manifest, r_out;
  bool r_no_fields = false;
  int r_iters = -1;
  double r_lambda = -1.0, r_lr = -1.0;
  std::string r_loss;
  sr->add_option("--wm", r_wm, "WM partial-volume map");
  sr->add_option("--wmgm", r_wmgm, "WM+GM partial-volume map");
  sr->add_option("--labels", r_labels, "parcellation labels");
  sr->add_option("--manifest", r_manifest, "cohort manifest (batch mode)");
  sr->add_option("--out", r_out, "output directory")->required();
  sr->add_flag("--no-fields", r_no_fields, "skip writing field volumes");
  sr->add_option("--max-iters", r_iters, "iteration budget");
  sr->add_option("--lambda", r_lambda, "smoothness weight");
  sr->add_option("--lr", r_lr, "velocity learning rate");
  sr->add_option("--loss", r_loss, "mse|l1")->check(CLI::IsMember({"mse", "l1"}));

  // train
  auto* st = app.add_subcommand("train", "train the amortized velocity regressor");
  std::string t_manifest, t_out, t_loss;
  int t_epochs = -1, t_patch = -1, t_features = -1, t_pooling = -1, t_val = -1,
      t_batch = -1, t_every = -1;
  double t_lambda = -1.0;
  std::uint64_t t_seed = 0;
  bool t_seed_set = false, t_icc = false;
  st->add_option("--manifest", t_manifest, "cohort manifest")->required();
  st->add_option("--out", t_out, "output directory")->required();
  st->add_option("--epochs", t_epochs, "training epochs");
  st->add_option("--patch", t_patch, "training patch size");
  st->add_option("--batch", t_batch, "batch size");
  st->add_option("--features", t_features, "feature depth at each resolution");
  st->add_option("--pooling", t_pooling, "pooling steps");
  st->add_option("--val-count", t_val, "validation subjects held out from the end");
  st->add_option("--checkpoint-every", t_every, "checkpoint cadence in epochs");
  st->add_option("--lambda", t_lambda, "smoothness weight");
  st->add_option("--loss", t_loss, "mse|l1")->check(CLI::IsMember({"mse", "l1"}));
  st->add_flag("--icc", t_icc, "compute per-checkpoint ICC during training (slow)");
  st->add_option("--seed", t_seed, "training seed")->each([&](const std::string&) {
    t_seed_set = true;
  });

  // thickness
  auto* sk = app.add_subcommand("thickness", "inference with a trained checkpoint");
  std::string k_model, k_wm, k_wmgm, k_labels, k_manifest, k_out;
  bool k_no_fields = false;
  sk->add_option("--model", k_model, "checkpoint file")->required();
  sk->add_option("--wm", k_wm, "WM partial-volume map");
  sk->add_option("--wmgm", k_wmgm, "WM+GM partial-volume map");
  sk->add_option("--labels", k_labels, "parcellation labels");
  sk->add_option("--manifest", k_manifest, "cohort manifest (batch mode)");
  sk->add_option("--out", k_out, "output directory")->required();
  sk->add_flag("--no-fields", k_no_fields, "skip writing field volumes");

  // eval
  auto* se = app.add_subcommand("eval", "agreement / sensitivity statistics");
  std::string e_mode, e_results, e_a, e_b, e_r2 = "ols", e_out;
  se->add_option("--mode", e_mode, "atrophy|agreement")
      ->required()
      ->check(CLI::IsMember({"atrophy", "agreement"}));
  se->add_option("--results", e_results, "results.csv from a cohort run (atrophy mode)");
  se->add_option("--a", e_a, "first results.csv (agreement mode)");
  se->add_option("--b", e_b, "second results.csv (agreement mode)");
  se->add_option("--r2-mode", e_r2, "ols|identity")
      ->check(CLI::IsMember({"ols", "identity"}));
  se->add_option("--out", e_out, "also write the JSON report here");

  // bench
  auto* sb = app.add_subcommand("bench", "iterative vs amortized wall clock");
  std::string b_wm, b_wmgm, b_model, b_out;
  int b_iters = -1;
  sb->add_option("--wm", b_wm, "WM partial-volume map")->required();
  sb->add_option("--wmgm", b_wmgm, "WM+GM partial-volume map")->required();
  sb->add_option("--model", b_model, "checkpoint (default: a fresh-initialized model)");
  sb->add_option("--iters", b_iters, "iterative budget override");
  sb->add_option("--out", b_out, "also write the JSON report here");

  CLI11_PARSE(app, argc, argv);

  try {
    PipelineConfig cfg = load_config(config_path);

    if (sp->parsed()) {
      const std::uint64_t seed = p_seed_set ? p_seed : cfg.seed;
      return cmd_phantom(cfg, p_out, p_subjects, p_kind, p_dim, p_levels, p_gm, p_extent,
                         p_amp, p_wave, seed);
    }
    if (sr->parsed()) {
      if (r_iters > 0) cfg.iterative.max_iters = r_iters;
      if (r_lambda >= 0.0) cfg.loss.lambda = r_lambda;
      if (r_lr > 0.0) cfg.iterative.lr = r_lr;
      if (!r_loss.empty()) cfg.loss.similarity = similarity_from_string(r_loss);
      detail::require(!r_manifest.empty() || (!r_wm.empty() && !r_wmgm.empty()),
                      "register: pass either --manifest or both --wm and --wmgm");
      return cmd_register(cfg, r_wm, r_wmgm, r_labels, r_manifest, r_out, !r_no_fields);
    }
    if (st->parsed()) {
      if (t_epochs >= 0) cfg.train.epochs = t_epochs;
      if (t_patch > 0) cfg.train.patch = t_patch;
      if (t_batch > 0) cfg.train.batch = t_batch;
      if (t_every > 0) cfg.train.checkpoint_every = t_every;
      if (t_features > 0) cfg.spec.base_features = t_features;
      if (t_pooling > 0) cfg.spec.pooling_steps = t_pooling;
      if (t_val > 0) cfg.val_count = t_val;
      if (t_lambda >= 0.0) cfg.loss.lambda = t_lambda;
      if (!t_loss.empty()) cfg.loss.similarity = similarity_from_string(t_loss);
      if (t_seed_set) cfg.seed = t_seed;
      cfg.train.compute_icc = cfg.train.compute_icc || t_icc;
      return cmd_train(cfg, t_manifest, t_out);
    }
    if (sk->parsed()) {
      detail::require(!k_manifest.empty() || (!k_wm.empty() && !k_wmgm.empty()),
                      "thickness: pass either --manifest or both --wm and --wmgm");
      return cmd_thickness(cfg, k_model, k_wm, k_wmgm, k_labels, k_manifest, k_out,
                           !k_no_fields);
    }
    if (se->parsed()) {
      if (e_mode == "atrophy")
        detail::require(!e_results.empty(), "eval --mode atrophy needs --results");
      else
        detail::require(!e_a.empty() && !e_b.empty(),
                        "eval --mode agreement needs --a and --b");
      return cmd_eval(e_mode, e_results, e_a, e_b, e_r2, e_out);
    }
    if (sb->parsed()) {
      return cmd_bench(cfg, b_wm, b_wmgm, b_model, b_iters, b_out);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "corthick: error: %s\n", e.what());
    return 2;
  }
  return 0;
}
