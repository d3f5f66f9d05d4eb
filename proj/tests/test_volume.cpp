#include <doctest.h>

#include <random>

#include "corthick/grid.hpp"
#include "corthick/interp.hpp"
#include "helpers.hpp"

using namespace corthick;

TEST_SUITE_BEGIN("volume");

TEST_CASE("trilinear_sample reproduces constants anywhere") {
  ScalarVolume v(make_meta(4, 3, 5), 2.75);
  CHECK(trilinear_sample(v, 1.2, 0.7, 3.3) == doctest::Approx(2.75).epsilon(1e-12));
  CHECK(trilinear_sample(v, -4.0, 9.0, 2.0) == doctest::Approx(2.75).epsilon(1e-12));
  CHECK(trilinear_sample(v, 0.0, 0.0, 0.0) == 2.75);
}

TEST_CASE("trilinear_sample midpoint of a two-voxel ramp") {
  ScalarVolume v(make_meta(2, 1, 1));
  v.at(0, 0, 0) = 0.0;
  v.at(1, 0, 0) = 1.0;
  CHECK(trilinear_sample(v, 0.5, 0.0, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("trilinear_sample is exact on lattice points") {
  // Oracle: direct array lookup.
  ScalarVolume v = testing::random_volume(make_meta(4, 4, 4), 101);
  for (int z = 0; z < 4; ++z)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x)
        CHECK(trilinear_sample(v, x, y, z) == v.at(x, y, z));
}

TEST_CASE("trilinear_sample is affine-exact in the interior") {
  const GridMeta meta = make_meta(6, 5, 7);
  ScalarVolume v(meta);
  const double a[3] = {0.3, -1.1, 0.45};
  const double b = 2.0;
  for (int z = 0; z < meta.nz(); ++z)
    for (int y = 0; y < meta.ny(); ++y)
      for (int x = 0; x < meta.nx(); ++x)
        v.at(x, y, z) = a[0] * x + a[1] * y + a[2] * z + b;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double px = d(rng) * (meta.nx() - 1);
    const double py = d(rng) * (meta.ny() - 1);
    const double pz = d(rng) * (meta.nz() - 1);
    const double expected = a[0] * px + a[1] * py + a[2] * pz + b;
    CHECK(trilinear_sample(v, px, py, pz) == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("out-of-grid samples replicate the nearest edge") {
  ScalarVolume v = testing::random_volume(make_meta(3, 3, 3), 55);
  CHECK(trilinear_sample(v, -2.0, 1.0, 1.0) == doctest::Approx(v.at(0, 1, 1)));
  CHECK(trilinear_sample(v, 7.5, 1.0, 1.0) == doctest::Approx(v.at(2, 1, 1)));
  CHECK(trilinear_sample(v, 1.0, 1.0, 99.0) == doctest::Approx(v.at(1, 1, 2)));
}

TEST_CASE("non-finite sample point is rejected") {
  ScalarVolume v(make_meta(2, 2, 2));
  CHECK_THROWS(trilinear_sample(v, std::nan(""), 0.0, 0.0));
  CHECK_THROWS(trilinear_sample(v, 0.0, std::numeric_limits<double>::infinity(), 0.0));
}

TEST_CASE("spatial_gradient of a constant is zero") {
  ScalarVolume v(make_meta(3, 4, 3), 5.0);
  VectorField g = spatial_gradient(v);
  for (const Vec3& o : g.data) {
    CHECK(o.x == 0.0);
    CHECK(o.y == 0.0);
    CHECK(o.z == 0.0);
  }
}

TEST_CASE("spatial_gradient of a linear ramp") {
  const GridMeta meta = make_meta(5, 4, 4);
  ScalarVolume v(meta);
  for (int z = 0; z < 4; ++z)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 5; ++x) v.at(x, y, z) = static_cast<double>(x);
  VectorField g = spatial_gradient(v);
  for (int z = 0; z < 4; ++z)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 5; ++x) {
        CHECK(g.at(x, y, z).x == doctest::Approx(1.0));
        CHECK(g.at(x, y, z).y == 0.0);
        CHECK(g.at(x, y, z).z == 0.0);
      }
}

TEST_CASE("spatial_gradient matches an explicit finite-difference oracle") {
  const GridMeta meta = make_meta(5, 5, 5);
  ScalarVolume v = testing::random_volume(meta, 321);
  VectorField g = spatial_gradient(v);
  // Oracle: recompute with explicit index arithmetic, axis by axis.
  auto oracle_axis = [&](int x, int y, int z, int axis) {
    int lo[3] = {x, y, z}, hi[3] = {x, y, z};
    const int n = meta.dims[axis];
    int c = lo[axis];
    double scale = 0.5;
    if (c == 0) {
      hi[axis] = 1;
      scale = 1.0;
    } else if (c == n - 1) {
      lo[axis] = n - 2;
      scale = 1.0;
    } else {
      lo[axis] = c - 1;
      hi[axis] = c + 1;
    }
    return scale * (v.at(hi[0], hi[1], hi[2]) - v.at(lo[0], lo[1], lo[2]));
  };
  for (int z = 0; z < 5; ++z)
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 5; ++x) {
        CHECK(g.at(x, y, z).x == doctest::Approx(oracle_axis(x, y, z, 0)).epsilon(1e-12));
        CHECK(g.at(x, y, z).y == doctest::Approx(oracle_axis(x, y, z, 1)).epsilon(1e-12));
        CHECK(g.at(x, y, z).z == doctest::Approx(oracle_axis(x, y, z, 2)).epsilon(1e-12));
      }
}

TEST_CASE("spatial_gradient rejects degenerate dims") {
  ScalarVolume v(make_meta(1, 4, 4));
  CHECK_THROWS(spatial_gradient(v));
}

TEST_CASE("GridMeta validation names the failing field") {
  GridMeta m = make_meta(2, 2, 2);
  m.dims[1] = 0;
  CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("dims"), std::runtime_error);
  m = make_meta(2, 2, 2);
  m.spacing_mm[2] = -1.0;
  CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("spacing_mm"), std::runtime_error);
}

TEST_SUITE_END();
