// grid.hpp - core 3D grid containers.
//
// All volumes are dense x-fastest arrays over a GridMeta (voxel counts plus
// physical spacing in mm). Displacement and velocity fields are stored in
// voxel units; conversion to mm happens only where thickness is reported.
// Containers are plain value types: immutable-after-construction by
// convention, safe to share across threads for reads.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace corthick {

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw std::runtime_error(msg);
}

// Fixed shortest-ish float formatting; keeps CSV outputs byte-stable.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

} // namespace detail

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
  friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend bool operator==(const Vec3& a, const Vec3& b) {
    return a.x == b.x && a.y == b.y && a.z == b.z;
  }

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

static_assert(sizeof(Vec3) == 3 * sizeof(double), "Vec3 must be tightly packed");

struct GridMeta {
  std::array<int, 3> dims{1, 1, 1};            // (nx, ny, nz)
  std::array<double, 3> spacing_mm{1.0, 1.0, 1.0};

  std::size_t voxels() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  int nx() const { return dims[0]; }
  int ny() const { return dims[1]; }
  int nz() const { return dims[2]; }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims[1]) * z);
  }

  void validate() const {
    for (int a = 0; a < 3; ++a) {
      detail::require(dims[a] >= 1, "GridMeta.dims: axis " + std::to_string(a) +
                                        " must be >= 1, got " + std::to_string(dims[a]));
      detail::require(std::isfinite(spacing_mm[a]) && spacing_mm[a] > 0.0,
                      "GridMeta.spacing_mm: axis " + std::to_string(a) +
                          " must be finite and > 0");
    }
  }

  friend bool operator==(const GridMeta& a, const GridMeta& b) {
    return a.dims == b.dims && a.spacing_mm == b.spacing_mm;
  }
  friend bool operator!=(const GridMeta& a, const GridMeta& b) { return !(a == b); }
};

inline GridMeta make_meta(int nx, int ny, int nz, double sx = 1.0, double sy = 1.0,
                          double sz = 1.0) {
  GridMeta m;
  m.dims = {nx, ny, nz};
  m.spacing_mm = {sx, sy, sz};
  m.validate();
  return m;
}

struct ScalarVolume {
  GridMeta meta;
  std::vector<double> data;  // x-fastest

  ScalarVolume() = default;
  explicit ScalarVolume(const GridMeta& m, double fill = 0.0)
      : meta(m), data(m.voxels(), fill) {
    meta.validate();
  }

  double& at(int x, int y, int z) { return data[meta.index(x, y, z)]; }
  double at(int x, int y, int z) const { return data[meta.index(x, y, z)]; }

  void validate(bool as_partial_volume = false, double pv_tol = 1e-4) {
    meta.validate();
    detail::require(data.size() == meta.voxels(),
                    "ScalarVolume.data: length " + std::to_string(data.size()) +
                        " does not match dims product " + std::to_string(meta.voxels()));
    for (std::size_t i = 0; i < data.size(); ++i) {
      detail::require(std::isfinite(data[i]),
                      "ScalarVolume.data: non-finite value at linear index " +
                          std::to_string(i));
      if (as_partial_volume) {
        detail::require(data[i] >= -pv_tol && data[i] <= 1.0 + pv_tol,
                        "ScalarVolume.data: partial-volume value " +
                            std::to_string(data[i]) + " at linear index " +
                            std::to_string(i) + " outside [0,1] tolerance");
        if (data[i] < 0.0) data[i] = 0.0;
        if (data[i] > 1.0) data[i] = 1.0;
      }
    }
  }
};

struct VectorField {
  GridMeta meta;
  std::vector<Vec3> data;  // x-fastest

  VectorField() = default;
  explicit VectorField(const GridMeta& m, Vec3 fill = {})
      : meta(m), data(m.voxels(), fill) {
    meta.validate();
  }

  Vec3& at(int x, int y, int z) { return data[meta.index(x, y, z)]; }
  const Vec3& at(int x, int y, int z) const { return data[meta.index(x, y, z)]; }

  // Flat double view over the packed (x,y,z) components; used by the
  // optimizer and by serialization.
  double* flat() { return reinterpret_cast<double*>(data.data()); }
  const double* flat() const { return reinterpret_cast<const double*>(data.data()); }
  std::size_t flat_size() const { return data.size() * 3; }

  bool finite() const {
    for (const Vec3& v : data)
      if (!v.finite()) return false;
    return true;
  }

  void validate() const {
    meta.validate();
    detail::require(data.size() == meta.voxels(),
                    "VectorField.data: length does not match dims product");
    for (std::size_t i = 0; i < data.size(); ++i)
      detail::require(data[i].finite(),
                      "VectorField.data: non-finite component at linear index " +
                          std::to_string(i));
  }
};

inline VectorField negated(const VectorField& f) {
  VectorField r(f.meta);
  for (std::size_t i = 0; i < f.data.size(); ++i) r.data[i] = f.data[i] * -1.0;
  return r;
}

struct LabelVolume {
  GridMeta meta;
  std::vector<std::uint32_t> labels;  // 0 = background

  LabelVolume() = default;
  explicit LabelVolume(const GridMeta& m, std::uint32_t fill = 0)
      : meta(m), labels(m.voxels(), fill) {
    meta.validate();
  }

  std::uint32_t& at(int x, int y, int z) { return labels[meta.index(x, y, z)]; }
  std::uint32_t at(int x, int y, int z) const { return labels[meta.index(x, y, z)]; }

  void validate() const {
    meta.validate();
    detail::require(labels.size() == meta.voxels(),
                    "LabelVolume.labels: length does not match dims product");
  }
};

} // namespace corthick
