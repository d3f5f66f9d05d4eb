// thickness.hpp - gray-white interface extraction and thickness readout.
//
// Thickness at a GWI voxel is the magnitude of the reverse displacement
// there, converted to mm through the voxel spacing. The GWI is the set of
// WM voxels (P_w >= wm threshold) with at least one 6-connected GM neighbor
// (P_g >= gm threshold); the field is read at voxel centers, no subvoxel
// surface refinement.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "corthick/grid.hpp"

namespace corthick {

struct GwiThresholds {
  double wm = 0.5;
  double gm = 0.5;

  void validate() const {
    detail::require(wm > 0.0 && wm < 1.0 && gm > 0.0 && gm < 1.0,
                    "GwiThresholds must lie in (0,1)");
  }
};

struct GwiMask {
  GridMeta meta;
  std::vector<std::uint8_t> mask;

  std::size_t count() const {
    std::size_t c = 0;
    for (std::uint8_t m : mask) c += m;
    return c;
  }
};

inline GwiMask extract_gwi(const ScalarVolume& wm, const ScalarVolume& gm,
                           const GwiThresholds& thr = {}) {
  thr.validate();
  detail::require(wm.meta.dims == gm.meta.dims, "extract_gwi: dims differ");
  const int nx = wm.meta.nx(), ny = wm.meta.ny(), nz = wm.meta.nz();
  GwiMask out;
  out.meta = wm.meta;
  out.mask.assign(wm.meta.voxels(), 0);
  constexpr int off[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                             {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        if (wm.at(x, y, z) < thr.wm) continue;
        bool adjacent = false;
        for (int k = 0; k < 6 && !adjacent; ++k) {
          const int xx = x + off[k][0], yy = y + off[k][1], zz = z + off[k][2];
          if (xx < 0 || yy < 0 || zz < 0 || xx >= nx || yy >= ny || zz >= nz) continue;
          adjacent = gm.at(xx, yy, zz) >= thr.gm;
        }
        if (adjacent) out.mask[wm.meta.index(x, y, z)] = 1;
      }
  return out;
}

// Per-voxel thickness in mm on the GWI; zero elsewhere.
inline ScalarVolume thickness_map(const VectorField& phi_neg, const GwiMask& mask) {
  detail::require(phi_neg.meta.dims == mask.meta.dims, "thickness_map: dims differ");
  const auto& sp = phi_neg.meta.spacing_mm;
  ScalarVolume t(phi_neg.meta);
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    if (!mask.mask[i]) continue;
    const Vec3& u = phi_neg.data[i];
    t.data[i] = std::sqrt(u.x * sp[0] * u.x * sp[0] + u.y * sp[1] * u.y * sp[1] +
                          u.z * sp[2] * u.z * sp[2]);
  }
  return t;
}

struct RegionStat {
  std::uint32_t label = 0;
  double mean_mm = 0.0;
  double std_mm = 0.0;
  std::size_t count = 0;
};

struct ThicknessReport {
  ScalarVolume thickness_mm;  // zero off the GWI
  GwiMask gwi;
  double global_mean_mm = 0.0;
  double global_std_mm = 0.0;
  std::size_t global_count = 0;
  std::vector<RegionStat> regions;  // sorted by label; label 0 excluded
};

// Groups GWI thickness by parcellation label. Label 0 is excluded from the
// region table but contributes to the global statistics.
inline ThicknessReport regional_thickness(const ScalarVolume& thickness,
                                          const GwiMask& mask,
                                          const LabelVolume& parcellation) {
  detail::require(thickness.meta.dims == mask.meta.dims &&
                      thickness.meta.dims == parcellation.meta.dims,
                  "regional_thickness: dims differ");
  ThicknessReport rep;
  rep.thickness_mm = thickness;
  rep.gwi = mask;

  struct Acc {
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
  };
  Acc global;
  std::map<std::uint32_t, Acc> per_label;
  for (std::size_t i = 0; i < mask.mask.size(); ++i) {
    if (!mask.mask[i]) continue;
    const double v = thickness.data[i];
    global.sum += v;
    global.sum2 += v * v;
    global.n += 1;
    const std::uint32_t lab = parcellation.labels[i];
    if (lab != 0) {
      Acc& a = per_label[lab];
      a.sum += v;
      a.sum2 += v * v;
      a.n += 1;
    }
  }
  auto finish = [](const Acc& a, double& mean, double& sd) {
    mean = a.n ? a.sum / a.n : 0.0;
    const double var = a.n ? std::max(0.0, a.sum2 / a.n - mean * mean) : 0.0;
    sd = std::sqrt(var);
  };
  finish(global, rep.global_mean_mm, rep.global_std_mm);
  rep.global_count = global.n;
  for (const auto& [label, acc] : per_label) {
    RegionStat rs;
    rs.label = label;
    rs.count = acc.n;
    finish(acc, rs.mean_mm, rs.std_mm);
    rep.regions.push_back(rs);
  }
  return rep;
}

inline void write_report_csv(const ThicknessReport& rep, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  detail::require(out.good(), "cannot open file for writing: " + path);
  out << "label,mean_mm,std_mm,count\n";
  for (const RegionStat& r : rep.regions)
    out << r.label << ',' << detail::format_double(r.mean_mm) << ','
        << detail::format_double(r.std_mm) << ',' << r.count << '\n';
  out.flush();
  detail::require(out.good(), "write failure: " + path);
}

inline nlohmann::json report_to_json(const ThicknessReport& rep) {
  nlohmann::json j;
  j["global"] = {{"mean_mm", rep.global_mean_mm},
                 {"std_mm", rep.global_std_mm},
                 {"count", rep.global_count}};
  j["regions"] = nlohmann::json::array();
  for (const RegionStat& r : rep.regions)
    j["regions"].push_back({{"label", r.label},
                            {"mean_mm", r.mean_mm},
                            {"std_mm", r.std_mm},
                            {"count", r.count}});
  return j;
}

inline void write_report_json(const ThicknessReport& rep, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  detail::require(out.good(), "cannot open file for writing: " + path);
  out << report_to_json(rep).dump(2) << '\n';
  out.flush();
  detail::require(out.good(), "write failure: " + path);
}

} // namespace corthick
