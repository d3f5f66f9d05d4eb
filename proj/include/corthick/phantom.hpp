// phantom.hpp - analytic cortical phantoms with known ground truth.
//
// Slab phantoms build partial volumes from exact plane-coverage fractions:
// a boundary at fractional z gives the straddled voxel exactly its covered
// fraction, so ground-truth thickness and its change under atrophy are exact.
// Shell phantoms supersample boundary voxels (4^3 subcells), a documented
// approximation. Atrophy thins the gray band from the pial side only; the
// gray-white interface stays fixed.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "corthick/grid.hpp"

namespace corthick {

enum class PhantomKind { slab, spherical_shell };

struct PhantomSpec {
  PhantomKind kind = PhantomKind::slab;
  std::array<int, 3> dims{32, 32, 32};
  std::array<double, 3> spacing_mm{1.0, 1.0, 1.0};
  // Slab: WM occupies z below this plane (voxel coords). Shell: inner radius
  // in voxels around the grid center.
  double wm_extent_vox = 12.5;
  double gm_thickness_mm = 3.0;
  double atrophy_mm = 0.0;
  // Optional sinusoidal perturbation of the interface (slab only); both
  // surfaces shift together so the band thickness is preserved.
  double perturb_amplitude_vox = 0.0;
  double perturb_wavelength_vox = 8.0;
  // Nonzero: adds a deterministic sub-voxel offset drawn from this seed to
  // the interface placement. Zero: no jitter.
  std::uint64_t jitter_seed = 0;

  void validate() const {
    GridMeta m;
    m.dims = dims;
    m.spacing_mm = spacing_mm;
    m.validate();
    detail::require(std::isfinite(gm_thickness_mm) && gm_thickness_mm > 0.0,
                    "PhantomSpec.gm_thickness_mm must be > 0");
    detail::require(std::isfinite(atrophy_mm) && atrophy_mm >= 0.0,
                    "PhantomSpec.atrophy_mm must be >= 0");
    detail::require(gm_thickness_mm - atrophy_mm > 0.0,
                    "PhantomSpec: atrophy_mm must leave positive gray thickness");
    detail::require(perturb_amplitude_vox >= 0.0,
                    "PhantomSpec.perturb_amplitude_vox must be >= 0");
    if (perturb_amplitude_vox > 0.0)
      detail::require(perturb_wavelength_vox > 0.0,
                      "PhantomSpec.perturb_wavelength_vox must be > 0");
    if (kind == PhantomKind::spherical_shell)
      detail::require(spacing_mm[0] == spacing_mm[1] && spacing_mm[1] == spacing_mm[2],
                      "PhantomSpec: shell phantoms require isotropic spacing");
  }
};

struct PhantomInstance {
  ScalarVolume wm;
  ScalarVolume wmgm;
  LabelVolume parcellation;
  double gt_thickness_mm = 0.0;
};

namespace detail {

// Covered fraction of voxel k (extent [k-0.5, k+0.5]) below a plane at c.
inline double plane_coverage(int k, double c) {
  const double lo = k - 0.5;
  double f = c - lo;
  if (f < 0.0) f = 0.0;
  if (f > 1.0) f = 1.0;
  return f;
}

inline double jitter_offset(std::uint64_t seed) {
  if (seed == 0) return 0.0;
  std::mt19937_64 rng(seed);
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline PhantomInstance make_slab(const PhantomSpec& spec) {
  GridMeta meta;
  meta.dims = spec.dims;
  meta.spacing_mm = spec.spacing_mm;
  const double sz = spec.spacing_mm[2];
  const double gm_base_vox = spec.gm_thickness_mm / sz;
  const double gm_eff_vox = (spec.gm_thickness_mm - spec.atrophy_mm) / sz;
  const double wm_top = spec.wm_extent_vox + jitter_offset(spec.jitter_seed);
  require(wm_top >= 1.5, "PhantomSpec: slab interface too close to the z=0 face");
  require(wm_top + gm_base_vox <= meta.nz() - 1.5,
          "PhantomSpec: slab pial surface too close to the top face");

  PhantomInstance inst;
  inst.wm = ScalarVolume(meta);
  inst.wmgm = ScalarVolume(meta);
  inst.parcellation = LabelVolume(meta, 1);
  inst.gt_thickness_mm = spec.gm_thickness_mm - spec.atrophy_mm;

  const double two_pi = 2.0 * 3.14159265358979323846;
  for (int y = 0; y < meta.ny(); ++y)
    for (int x = 0; x < meta.nx(); ++x) {
      double top = wm_top;
      if (spec.perturb_amplitude_vox > 0.0)
        top += spec.perturb_amplitude_vox *
               std::sin(two_pi * x / spec.perturb_wavelength_vox) *
               std::sin(two_pi * y / spec.perturb_wavelength_vox);
      const double pial = top + gm_eff_vox;
      for (int z = 0; z < meta.nz(); ++z) {
        inst.wm.at(x, y, z) = plane_coverage(z, top);
        inst.wmgm.at(x, y, z) = plane_coverage(z, pial);
      }
    }
  return inst;
}

inline PhantomInstance make_shell(const PhantomSpec& spec) {
  GridMeta meta;
  meta.dims = spec.dims;
  meta.spacing_mm = spec.spacing_mm;
  const double s = spec.spacing_mm[0];
  const double r_in = spec.wm_extent_vox + jitter_offset(spec.jitter_seed);
  const double r_out = r_in + (spec.gm_thickness_mm - spec.atrophy_mm) / s;
  const double cx = 0.5 * (meta.nx() - 1);
  const double cy = 0.5 * (meta.ny() - 1);
  const double cz = 0.5 * (meta.nz() - 1);
  require(r_in >= 2.0, "PhantomSpec: shell inner radius too small");
  const double max_r = std::min({cx, cy, cz});
  require(r_out <= max_r - 1.5,
          "PhantomSpec: shell outer radius too close to the grid boundary");

  PhantomInstance inst;
  inst.wm = ScalarVolume(meta);
  inst.wmgm = ScalarVolume(meta);
  inst.parcellation = LabelVolume(meta);
  inst.gt_thickness_mm = spec.gm_thickness_mm - spec.atrophy_mm;

  const double half_diag = 0.5 * std::sqrt(3.0);
  auto ball_fraction = [&](double dx, double dy, double dz, double radius) {
    const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
    if (r <= radius - half_diag) return 1.0;
    if (r >= radius + half_diag) return 0.0;
    int inside = 0;  // 4^3 supersampling of the straddled voxel
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c) {
          const double px = dx + (a + 0.5) / 4.0 - 0.5;
          const double py = dy + (b + 0.5) / 4.0 - 0.5;
          const double pz = dz + (c + 0.5) / 4.0 - 0.5;
          if (px * px + py * py + pz * pz <= radius * radius) ++inside;
        }
    return inside / 64.0;
  };

  for (int z = 0; z < meta.nz(); ++z)
    for (int y = 0; y < meta.ny(); ++y)
      for (int x = 0; x < meta.nx(); ++x) {
        const double dx = x - cx, dy = y - cy, dz = z - cz;
        inst.wm.at(x, y, z) = ball_fraction(dx, dy, dz, r_in);
        inst.wmgm.at(x, y, z) = ball_fraction(dx, dy, dz, r_out);
        const std::uint32_t octant = (dx > 0 ? 1u : 0u) | (dy > 0 ? 2u : 0u) |
                                     (dz > 0 ? 4u : 0u);
        inst.parcellation.at(x, y, z) = 1 + octant;
      }
  return inst;
}

} // namespace detail

inline PhantomInstance make_phantom(const PhantomSpec& spec) {
  spec.validate();
  PhantomInstance inst = spec.kind == PhantomKind::slab ? detail::make_slab(spec)
                                                        : detail::make_shell(spec);
  // GM adds to WM, never removes.
  for (std::size_t i = 0; i < inst.wm.data.size(); ++i)
    detail::require(inst.wmgm.data[i] >= inst.wm.data[i] - 1e-12,
                    "PhantomInstance: wmgm < wm at linear index " + std::to_string(i));
  return inst;
}

struct CohortEntry {
  int subject = 0;
  double atrophy_mm = 0.0;
  bool baseline = false;
  PhantomInstance instance;
  double gt_thickness_mm = 0.0;
};

// One baseline plus one instance per nonzero atrophy level for every subject
// (a level of exactly 0 is the baseline itself), with per-subject jittered
// interface placement. Deterministic under `seed`.
inline std::vector<CohortEntry> generate_cohort(const std::vector<PhantomSpec>& subjects,
                                                const std::vector<double>& atrophy_levels_mm,
                                                std::uint64_t seed) {
  detail::require(!subjects.empty(), "generate_cohort: need at least one subject spec");
  for (std::size_t i = 0; i < atrophy_levels_mm.size(); ++i) {
    detail::require(atrophy_levels_mm[i] >= 0.0,
                    "generate_cohort: atrophy levels must be non-negative");
    if (i > 0)
      detail::require(atrophy_levels_mm[i] > atrophy_levels_mm[i - 1],
                      "generate_cohort: atrophy levels must be strictly increasing");
  }
  std::vector<CohortEntry> cohort;
  cohort.reserve(subjects.size() * (atrophy_levels_mm.size() + 1));
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    PhantomSpec base = subjects[s];
    base.jitter_seed = seed * 1000003ull + s * 7919ull + 1ull;

    CohortEntry baseline;
    baseline.subject = static_cast<int>(s);
    baseline.baseline = true;
    PhantomSpec b = base;
    b.atrophy_mm = 0.0;
    baseline.instance = make_phantom(b);
    baseline.gt_thickness_mm = baseline.instance.gt_thickness_mm;
    cohort.push_back(std::move(baseline));

    for (double level : atrophy_levels_mm) {
      if (level == 0.0) continue;  // the baseline covers level zero
      CohortEntry e;
      e.subject = static_cast<int>(s);
      e.atrophy_mm = level;
      PhantomSpec ps = base;
      ps.atrophy_mm = level;
      e.instance = make_phantom(ps);
      e.gt_thickness_mm = e.instance.gt_thickness_mm;
      cohort.push_back(std::move(e));
    }
  }
  return cohort;
}

} // namespace corthick
