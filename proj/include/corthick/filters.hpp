// filters.hpp - small separable smoothing filters for vector fields.

#pragma once

#include "corthick/grid.hpp"

namespace corthick {

// One pass of a separable 3-tap binomial filter ([1,2,1]/4 per axis) with
// replicated edges. `passes` controls the effective width.
inline VectorField binomial_smooth(const VectorField& f, int passes = 1) {
  VectorField cur = f;
  const int nx = f.meta.nx(), ny = f.meta.ny(), nz = f.meta.nz();
  VectorField tmp(f.meta);
  auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
  for (int p = 0; p < passes; ++p) {
    for (int axis = 0; axis < 3; ++axis) {
      for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
          for (int x = 0; x < nx; ++x) {
            int xm = x, xp = x, ym = y, yp = y, zm = z, zp = z;
            if (axis == 0) { xm = clampi(x - 1, 0, nx - 1); xp = clampi(x + 1, 0, nx - 1); }
            if (axis == 1) { ym = clampi(y - 1, 0, ny - 1); yp = clampi(y + 1, 0, ny - 1); }
            if (axis == 2) { zm = clampi(z - 1, 0, nz - 1); zp = clampi(z + 1, 0, nz - 1); }
            tmp.at(x, y, z) = 0.25 * (cur.at(xm, ym, zm) + 2.0 * cur.at(x, y, z) +
                                      cur.at(xp, yp, zp));
          }
      std::swap(cur.data, tmp.data);
    }
  }
  return cur;
}

} // namespace corthick
