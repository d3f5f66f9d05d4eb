// svf.hpp - stationary velocity field exponentiation.
//
// A velocity field z is integrated into a displacement field by scaling and
// squaring: u_0 = z / 2^steps, then u_{k+1} = u_k o u_k. Integrating -z gives
// the reverse deformation directly, so no numerical field inversion is
// needed. svf_backward runs the exact reverse-mode gradient through every
// squaring composition and the initial scaling.

#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "corthick/grid.hpp"
#include "corthick/warp.hpp"

namespace corthick {

struct IntegrationConfig {
  int steps = 7;

  void validate() const {
    detail::require(steps >= 1 && steps <= 12,
                    "IntegrationConfig.steps must be in [1, 12], got " +
                        std::to_string(steps));
  }
};

struct SvfTape {
  IntegrationConfig cfg;
  GridMeta meta;
  std::vector<VectorField> inputs;  // u_k before squaring k
  std::vector<WarpTape> tapes;      // composition tape of squaring k

  void check(const GridMeta& g) const {
    detail::require(meta == g && inputs.size() == static_cast<std::size_t>(cfg.steps) &&
                        tapes.size() == inputs.size(),
                    "SvfTape: tape does not match this field (stale tape?)");
  }
};

inline std::pair<VectorField, SvfTape> integrate_svf(const VectorField& z,
                                                     const IntegrationConfig& cfg = {}) {
  cfg.validate();
  detail::require(z.finite(), "integrate_svf: velocity field has non-finite values");
  const double scale = std::ldexp(1.0, -cfg.steps);  // 1 / 2^steps
  VectorField u(z.meta);
  for (std::size_t i = 0; i < u.data.size(); ++i) u.data[i] = z.data[i] * scale;

  SvfTape tape;
  tape.cfg = cfg;
  tape.meta = z.meta;
  tape.inputs.reserve(cfg.steps);
  tape.tapes.reserve(cfg.steps);
  for (int k = 0; k < cfg.steps; ++k) {
    tape.inputs.push_back(u);
    auto [next, wt] = compose_displacements(u, u);
    tape.tapes.push_back(std::move(wt));
    u = std::move(next);
  }
  return {std::move(u), std::move(tape)};
}

inline std::pair<VectorField, SvfTape> integrate_svf_reverse(
    const VectorField& z, const IntegrationConfig& cfg = {}) {
  return integrate_svf(negated(z), cfg);
}

// Integration without tape recording, for inference and loss evaluation.
inline VectorField integrate_svf_notape(const VectorField& z,
                                        const IntegrationConfig& cfg = {}) {
  cfg.validate();
  detail::require(z.finite(), "integrate_svf: velocity field has non-finite values");
  const double scale = std::ldexp(1.0, -cfg.steps);
  VectorField u(z.meta);
  for (std::size_t i = 0; i < u.data.size(); ++i) u.data[i] = z.data[i] * scale;
  for (int k = 0; k < cfg.steps; ++k) u = compose_displacements_notape(u, u);
  return u;
}

// Gradient of the integrated field w.r.t. the velocity field. When the tape
// came from integrate_svf_reverse, the result is the gradient w.r.t. -z.
inline VectorField svf_backward(const SvfTape& tape, const VectorField& g_phi) {
  tape.check(g_phi.meta);
  VectorField g = g_phi;
  for (int k = tape.cfg.steps - 1; k >= 0; --k) {
    auto [g_a, g_b] = compose_adjoint(tape.tapes[k], tape.inputs[k], tape.inputs[k], g);
    for (std::size_t i = 0; i < g_a.data.size(); ++i)
      g_a.data[i] += g_b.data[i];
    g = std::move(g_a);
  }
  const double scale = std::ldexp(1.0, -tape.cfg.steps);
  for (Vec3& v : g.data) v *= scale;
  return g;
}

// det(I + grad u) per interior voxel via central differences. Face voxels
// are filled with 1; the diagnostic is only defined on the interior.
inline ScalarVolume jacobian_determinant(const VectorField& u) {
  const int nx = u.meta.nx(), ny = u.meta.ny(), nz = u.meta.nz();
  detail::require(nx >= 2 && ny >= 2 && nz >= 2,
                  "jacobian_determinant: every dim must be >= 2");
  ScalarVolume det(u.meta, 1.0);
  for (int z = 1; z < nz - 1; ++z)
    for (int y = 1; y < ny - 1; ++y)
      for (int x = 1; x < nx - 1; ++x) {
        const Vec3 dx = 0.5 * (u.at(x + 1, y, z) - u.at(x - 1, y, z));
        const Vec3 dy = 0.5 * (u.at(x, y + 1, z) - u.at(x, y - 1, z));
        const Vec3 dz = 0.5 * (u.at(x, y, z + 1) - u.at(x, y, z - 1));
        const double j00 = 1.0 + dx.x, j01 = dy.x, j02 = dz.x;
        const double j10 = dx.y, j11 = 1.0 + dy.y, j12 = dz.y;
        const double j20 = dx.z, j21 = dy.z, j22 = 1.0 + dz.z;
        det.at(x, y, z) = j00 * (j11 * j22 - j12 * j21) -
                          j01 * (j10 * j22 - j12 * j20) +
                          j02 * (j10 * j21 - j11 * j20);
      }
  return det;
}

} // namespace corthick
