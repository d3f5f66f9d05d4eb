// interp.hpp - trilinear sampling and spatial gradients.
//
// The sampling kernel uses clamped (replicated-edge) coordinates: points
// outside the grid sample the nearest face value. Because trilinear weights
// are convex, sampling a map with values in [0,1] stays in [0,1].
//
// TrilinearKernel records everything the adjoint needs: the eight corner
// indices, the fractional offsets, and a per-axis derivative mask that is 0
// where the coordinate was clamped (the sampled value is constant there).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

#include "corthick/grid.hpp"

namespace corthick {

struct TrilinearKernel {
  std::array<std::int32_t, 8> corner;  // bit0 -> +x, bit1 -> +y, bit2 -> +z
  double fx = 0.0, fy = 0.0, fz = 0.0;
  std::array<std::uint8_t, 3> deriv_mask{1, 1, 1};

  void weights(double w[8]) const {
    const double gx = 1.0 - fx, gy = 1.0 - fy, gz = 1.0 - fz;
    w[0] = gx * gy * gz;
    w[1] = fx * gy * gz;
    w[2] = gx * fy * gz;
    w[3] = fx * fy * gz;
    w[4] = gx * gy * fz;
    w[5] = fx * gy * fz;
    w[6] = gx * fy * fz;
    w[7] = fx * fy * fz;
  }
};

inline TrilinearKernel make_trilinear_kernel(const GridMeta& m, double px, double py,
                                             double pz) {
  TrilinearKernel k;
  const int n[3] = {m.dims[0], m.dims[1], m.dims[2]};
  const double p[3] = {px, py, pz};
  int base[3];
  double frac[3];
  for (int a = 0; a < 3; ++a) {
    const double hi = static_cast<double>(n[a] - 1);
    double c = p[a];
    std::uint8_t mask = (c >= 0.0 && c <= hi) ? 1 : 0;
    if (c < 0.0) c = 0.0;
    if (c > hi) c = hi;
    int b = static_cast<int>(std::floor(c));
    if (b > n[a] - 2) b = n[a] - 2;  // keeps b+1 valid; frac becomes 1 at the top face
    if (b < 0) b = 0;                // n[a] == 1: degenerate axis, frac 0
    base[a] = b;
    frac[a] = (n[a] == 1) ? 0.0 : c - b;
    if (n[a] == 1) mask = 0;
    if (a == 0) k.deriv_mask[0] = mask;
    if (a == 1) k.deriv_mask[1] = mask;
    if (a == 2) k.deriv_mask[2] = mask;
  }
  k.fx = frac[0];
  k.fy = frac[1];
  k.fz = frac[2];
  const int x1 = std::min(base[0] + 1, n[0] - 1);
  const int y1 = std::min(base[1] + 1, n[1] - 1);
  const int z1 = std::min(base[2] + 1, n[2] - 1);
  const int xs[2] = {base[0], x1};
  const int ys[2] = {base[1], y1};
  const int zs[2] = {base[2], z1};
  for (int b = 0; b < 8; ++b)
    k.corner[b] = static_cast<std::int32_t>(
        m.index(xs[b & 1], ys[(b >> 1) & 1], zs[(b >> 2) & 1]));
  return k;
}

inline double apply_kernel(const TrilinearKernel& k, const double* data) {
  double w[8];
  k.weights(w);
  double s = 0.0;
  for (int b = 0; b < 8; ++b) s += w[b] * data[k.corner[b]];
  return s;
}

inline Vec3 apply_kernel(const TrilinearKernel& k, const Vec3* data) {
  double w[8];
  k.weights(w);
  Vec3 s;
  for (int b = 0; b < 8; ++b) {
    const Vec3& v = data[k.corner[b]];
    s.x += w[b] * v.x;
    s.y += w[b] * v.y;
    s.z += w[b] * v.z;
  }
  return s;
}

// Derivative of the interpolated value with respect to the (unclamped)
// sample coordinates. Zero along axes where the coordinate was clamped.
inline Vec3 kernel_coordinate_gradient(const TrilinearKernel& k, const double* data) {
  const double gx = 1.0 - k.fx, gy = 1.0 - k.fy, gz = 1.0 - k.fz;
  const double c[8] = {data[k.corner[0]], data[k.corner[1]], data[k.corner[2]],
                       data[k.corner[3]], data[k.corner[4]], data[k.corner[5]],
                       data[k.corner[6]], data[k.corner[7]]};
  Vec3 g;
  g.x = gy * gz * (c[1] - c[0]) + k.fy * gz * (c[3] - c[2]) +
        gy * k.fz * (c[5] - c[4]) + k.fy * k.fz * (c[7] - c[6]);
  g.y = gx * gz * (c[2] - c[0]) + k.fx * gz * (c[3] - c[1]) +
        gx * k.fz * (c[6] - c[4]) + k.fx * k.fz * (c[7] - c[5]);
  g.z = gx * gy * (c[4] - c[0]) + k.fx * gy * (c[5] - c[1]) +
        gx * k.fy * (c[6] - c[2]) + k.fx * k.fy * (c[7] - c[3]);
  g.x *= k.deriv_mask[0];
  g.y *= k.deriv_mask[1];
  g.z *= k.deriv_mask[2];
  return g;
}

// Same derivative for a sampled vector field: d_coord[d] is the derivative of
// the sampled Vec3 with respect to sample coordinate d.
inline void kernel_coordinate_jacobian(const TrilinearKernel& k, const Vec3* data,
                                       Vec3 d_coord[3]) {
  const double gx = 1.0 - k.fx, gy = 1.0 - k.fy, gz = 1.0 - k.fz;
  const Vec3& c0 = data[k.corner[0]];
  const Vec3& c1 = data[k.corner[1]];
  const Vec3& c2 = data[k.corner[2]];
  const Vec3& c3 = data[k.corner[3]];
  const Vec3& c4 = data[k.corner[4]];
  const Vec3& c5 = data[k.corner[5]];
  const Vec3& c6 = data[k.corner[6]];
  const Vec3& c7 = data[k.corner[7]];
  d_coord[0] = gy * gz * (c1 - c0) + k.fy * gz * (c3 - c2) + gy * k.fz * (c5 - c4) +
               k.fy * k.fz * (c7 - c6);
  d_coord[1] = gx * gz * (c2 - c0) + k.fx * gz * (c3 - c1) + gx * k.fz * (c6 - c4) +
               k.fx * k.fz * (c7 - c5);
  d_coord[2] = gx * gy * (c4 - c0) + k.fx * gy * (c5 - c1) + gx * k.fy * (c6 - c2) +
               k.fx * k.fy * (c7 - c3);
  for (int a = 0; a < 3; ++a) d_coord[a] *= static_cast<double>(k.deriv_mask[a]);
}

inline double trilinear_sample(const ScalarVolume& v, double px, double py, double pz) {
  detail::require(std::isfinite(px) && std::isfinite(py) && std::isfinite(pz),
                  "trilinear_sample: non-finite sample point");
  return apply_kernel(make_trilinear_kernel(v.meta, px, py, pz), v.data.data());
}

inline double trilinear_sample(const ScalarVolume& v, const Vec3& p) {
  return trilinear_sample(v, p.x, p.y, p.z);
}

inline Vec3 trilinear_sample_vector(const VectorField& f, double px, double py,
                                    double pz) {
  detail::require(std::isfinite(px) && std::isfinite(py) && std::isfinite(pz),
                  "trilinear_sample_vector: non-finite sample point");
  return apply_kernel(make_trilinear_kernel(f.meta, px, py, pz), f.data.data());
}

// Central differences in the interior, one-sided at faces, in value/voxel.
inline VectorField spatial_gradient(const ScalarVolume& v) {
  const int nx = v.meta.nx(), ny = v.meta.ny(), nz = v.meta.nz();
  detail::require(nx >= 2 && ny >= 2 && nz >= 2,
                  "spatial_gradient: every dim must be >= 2");
  VectorField g(v.meta);
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        Vec3& o = g.at(x, y, z);
        if (x == 0)
          o.x = v.at(1, y, z) - v.at(0, y, z);
        else if (x == nx - 1)
          o.x = v.at(nx - 1, y, z) - v.at(nx - 2, y, z);
        else
          o.x = 0.5 * (v.at(x + 1, y, z) - v.at(x - 1, y, z));
        if (y == 0)
          o.y = v.at(x, 1, z) - v.at(x, 0, z);
        else if (y == ny - 1)
          o.y = v.at(x, ny - 1, z) - v.at(x, ny - 2, z);
        else
          o.y = 0.5 * (v.at(x, y + 1, z) - v.at(x, y - 1, z));
        if (z == 0)
          o.z = v.at(x, y, 1) - v.at(x, y, 0);
        else if (z == nz - 1)
          o.z = v.at(x, y, nz - 1) - v.at(x, y, nz - 2);
        else
          o.z = 0.5 * (v.at(x, y, z + 1) - v.at(x, y, z - 1));
      }
  return g;
}

} // namespace corthick
