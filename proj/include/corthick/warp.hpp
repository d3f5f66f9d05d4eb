// warp.hpp - spatial transformer and its exact adjoints.
//
// Displacements use the pull convention: output(x) = moving(x + u(x)), with
// replicated-edge sampling. Forward calls record a WarpTape (per-voxel
// sampling kernels) whose replay reproduces the forward output bit-exactly
// and which drives the reverse-mode adjoints.

#pragma once

#include <utility>
#include <vector>

#include "corthick/grid.hpp"
#include "corthick/interp.hpp"

namespace corthick {

struct WarpTape {
  GridMeta src;   // grid that was sampled
  GridMeta out;   // grid of the displacement / output
  std::vector<TrilinearKernel> kernels;  // one per output voxel

  void check(const GridMeta& src_meta, const GridMeta& out_meta) const {
    detail::require(src == src_meta && out == out_meta &&
                        kernels.size() == out.voxels(),
                    "WarpTape: tape does not match this forward call (stale tape?)");
  }
};

namespace detail {

inline WarpTape record_tape(const GridMeta& src, const GridMeta& out,
                            const VectorField& u) {
  WarpTape tape;
  tape.src = src;
  tape.out = out;
  tape.kernels.resize(out.voxels());
  std::size_t i = 0;
  for (int z = 0; z < out.nz(); ++z)
    for (int y = 0; y < out.ny(); ++y)
      for (int x = 0; x < out.nx(); ++x, ++i) {
        const Vec3& d = u.data[i];
        tape.kernels[i] =
            make_trilinear_kernel(src, x + d.x, y + d.y, z + d.z);
      }
  return tape;
}

} // namespace detail

inline std::pair<ScalarVolume, WarpTape> warp_scalar(const ScalarVolume& m,
                                                     const VectorField& u) {
  detail::require(m.meta.dims == u.meta.dims,
                  "warp_scalar: volume and displacement dims differ");
  WarpTape tape = detail::record_tape(m.meta, u.meta, u);
  ScalarVolume out(u.meta);
  const double* src = m.data.data();
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = apply_kernel(tape.kernels[i], src);
  return {std::move(out), std::move(tape)};
}

inline ScalarVolume warp_scalar_notape(const ScalarVolume& m, const VectorField& u) {
  detail::require(m.meta.dims == u.meta.dims,
                  "warp_scalar: volume and displacement dims differ");
  ScalarVolume out(u.meta);
  const double* src = m.data.data();
  std::size_t i = 0;
  for (int z = 0; z < u.meta.nz(); ++z)
    for (int y = 0; y < u.meta.ny(); ++y)
      for (int x = 0; x < u.meta.nx(); ++x, ++i) {
        const Vec3& d = u.data[i];
        out.data[i] = apply_kernel(
            make_trilinear_kernel(m.meta, x + d.x, y + d.y, z + d.z), src);
      }
  return out;
}

// Gradients of sum_x g_out(x) * output(x) w.r.t. the moving volume (scatter of
// the interpolation weights) and the displacement (sampled spatial gradient).
inline std::pair<ScalarVolume, VectorField> warp_scalar_adjoint(
    const WarpTape& tape, const ScalarVolume& m, const VectorField& u,
    const ScalarVolume& g_out) {
  tape.check(m.meta, u.meta);
  detail::require(g_out.meta.dims == tape.out.dims,
                  "warp_scalar_adjoint: g_out dims do not match the taped output");
  ScalarVolume g_m(m.meta);
  VectorField g_u(u.meta);
  const double* src = m.data.data();
  for (std::size_t i = 0; i < g_out.data.size(); ++i) {
    const double g = g_out.data[i];
    const TrilinearKernel& k = tape.kernels[i];
    if (g != 0.0) {
      double w[8];
      k.weights(w);
      for (int b = 0; b < 8; ++b) g_m.data[k.corner[b]] += g * w[b];
      g_u.data[i] = g * kernel_coordinate_gradient(k, src);
    }
  }
  return {std::move(g_m), std::move(g_u)};
}

// Composition of displacement maps: result(x) = b(x) + a(x + b(x)), so that
// x + result(x) equals applying (x -> x + b(x)) then (x -> x + a(x)).
inline std::pair<VectorField, WarpTape> compose_displacements(const VectorField& a,
                                                              const VectorField& b) {
  detail::require(a.meta.dims == b.meta.dims,
                  "compose_displacements: field dims differ");
  WarpTape tape = detail::record_tape(a.meta, b.meta, b);
  VectorField out(b.meta);
  const Vec3* src = a.data.data();
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = b.data[i] + apply_kernel(tape.kernels[i], src);
  return {std::move(out), std::move(tape)};
}

inline VectorField compose_displacements_notape(const VectorField& a,
                                                const VectorField& b) {
  detail::require(a.meta.dims == b.meta.dims,
                  "compose_displacements: field dims differ");
  VectorField out(b.meta);
  const Vec3* src = a.data.data();
  std::size_t i = 0;
  for (int z = 0; z < b.meta.nz(); ++z)
    for (int y = 0; y < b.meta.ny(); ++y)
      for (int x = 0; x < b.meta.nx(); ++x, ++i) {
        const Vec3& d = b.data[i];
        out.data[i] = d + apply_kernel(
                              make_trilinear_kernel(a.meta, x + d.x, y + d.y, z + d.z),
                              src);
      }
  return out;
}

inline std::pair<VectorField, VectorField> compose_adjoint(const WarpTape& tape,
                                                           const VectorField& a,
                                                           const VectorField& b,
                                                           const VectorField& g_result) {
  tape.check(a.meta, b.meta);
  detail::require(g_result.meta.dims == tape.out.dims,
                  "compose_adjoint: g_result dims do not match the taped output");
  VectorField g_a(a.meta);
  VectorField g_b(b.meta);
  const Vec3* src = a.data.data();
  for (std::size_t i = 0; i < g_result.data.size(); ++i) {
    const Vec3& g = g_result.data[i];
    g_b.data[i] += g;  // direct b(x) term
    const TrilinearKernel& k = tape.kernels[i];
    double w[8];
    k.weights(w);
    for (int c = 0; c < 8; ++c) {
      Vec3& t = g_a.data[k.corner[c]];
      t.x += g.x * w[c];
      t.y += g.y * w[c];
      t.z += g.z * w[c];
    }
    // Through the sample coordinates (coord = x + b(x)).
    Vec3 d_coord[3];
    kernel_coordinate_jacobian(k, src, d_coord);
    g_b.data[i].x += g.x * d_coord[0].x + g.y * d_coord[0].y + g.z * d_coord[0].z;
    g_b.data[i].y += g.x * d_coord[1].x + g.y * d_coord[1].y + g.z * d_coord[1].z;
    g_b.data[i].z += g.x * d_coord[2].x + g.y * d_coord[2].y + g.z * d_coord[2].z;
  }
  return {std::move(g_a), std::move(g_b)};
}

// Replays a tape against the recorded source volume; used to check the
// bit-exact replay invariant.
inline ScalarVolume replay_tape(const WarpTape& tape, const ScalarVolume& m) {
  detail::require(tape.src == m.meta, "replay_tape: source volume does not match tape");
  ScalarVolume out(tape.out);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = apply_kernel(tape.kernels[i], m.data.data());
  return out;
}

} // namespace corthick
