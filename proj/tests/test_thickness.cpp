#include <doctest.h>

#include "corthick/phantom.hpp"
#include "corthick/thickness.hpp"
#include "helpers.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace corthick;

namespace {

ScalarVolume gm_from(const PhantomInstance& inst) {
  ScalarVolume gm(inst.wm.meta);
  for (std::size_t i = 0; i < gm.data.size(); ++i)
    gm.data[i] = std::max(0.0, inst.wmgm.data[i] - inst.wm.data[i]);
  return gm;
}

} // namespace

TEST_SUITE_BEGIN("thickness");

TEST_CASE("no gray matter means an empty interface") {
  const GridMeta meta = make_meta(6, 6, 6);
  ScalarVolume wm(meta, 1.0);
  ScalarVolume gm(meta, 0.0);
  GwiMask mask = extract_gwi(wm, gm);
  CHECK(mask.count() == 0);
}

TEST_CASE("slab interface is exactly the last WM layer before the band") {
  PhantomSpec spec;
  spec.dims = {8, 8, 20};
  spec.wm_extent_vox = 8.5;  // WM fills voxels z=0..8 fully
  spec.gm_thickness_mm = 3.0;
  PhantomInstance inst = make_phantom(spec);
  GwiMask mask = extract_gwi(inst.wm, gm_from(inst));
  // Constructive geometry: only z=8 voxels are WM with a GM 6-neighbor.
  for (int z = 0; z < 20; ++z)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x)
        CHECK(static_cast<int>(mask.mask[mask.meta.index(x, y, z)]) == (z == 8 ? 1 : 0));
}

TEST_CASE("a lone WM voxel surrounded by GM is marked") {
  const GridMeta meta = make_meta(3, 3, 3);
  ScalarVolume wm(meta, 0.0), gm(meta, 1.0);
  wm.at(1, 1, 1) = 1.0;
  gm.at(1, 1, 1) = 0.0;
  GwiMask mask = extract_gwi(wm, gm);
  CHECK(mask.count() == 1);
  CHECK(mask.mask[meta.index(1, 1, 1)] == 1);
}

TEST_CASE("thickness is the spacing-weighted magnitude of the reverse field") {
  const GridMeta meta = make_meta(4, 4, 4);
  ScalarVolume wm(meta, 1.0), gm(meta, 0.0);
  gm.at(2, 1, 1) = 1.0;
  wm.at(2, 1, 1) = 0.0;
  GwiMask mask = extract_gwi(wm, gm);
  REQUIRE(mask.count() > 0);

  SUBCASE("zero field gives zero thickness") {
    VectorField phi_neg(meta);
    ScalarVolume t = thickness_map(phi_neg, mask);
    for (double v : t.data) CHECK(v == 0.0);
  }
  SUBCASE("axis-aligned displacement in 1mm spacing") {
    VectorField phi_neg(meta, Vec3{3.0, 0.0, 0.0});
    ScalarVolume t = thickness_map(phi_neg, mask);
    for (std::size_t i = 0; i < t.data.size(); ++i)
      if (mask.mask[i]) CHECK(t.data[i] == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("pythagorean magnitude") {
    VectorField phi_neg(meta, Vec3{3.0, 4.0, 0.0});
    ScalarVolume t = thickness_map(phi_neg, mask);
    for (std::size_t i = 0; i < t.data.size(); ++i)
      if (mask.mask[i]) CHECK(t.data[i] == doctest::Approx(5.0).epsilon(1e-12));
  }
  SUBCASE("anisotropic spacing converts voxels to mm per axis") {
    VectorField phi_neg(make_meta(4, 4, 4, 2.0, 1.0, 1.0), Vec3{3.0, 0.0, 0.0});
    GwiMask mask2 = mask;
    mask2.meta = phi_neg.meta;
    ScalarVolume t = thickness_map(phi_neg, mask2);
    for (std::size_t i = 0; i < t.data.size(); ++i)
      if (mask2.mask[i]) CHECK(t.data[i] == doctest::Approx(6.0).epsilon(1e-12));
  }
}

TEST_CASE("regional statistics group by label with label 0 global-only") {
  const GridMeta meta = make_meta(4, 1, 1);
  GwiMask mask;
  mask.meta = meta;
  mask.mask = {1, 1, 1, 1};
  ScalarVolume t(meta);
  t.data = {2.0, 2.0, 4.0, 4.0};
  LabelVolume labels(meta);
  labels.labels = {7, 7, 9, 9};
  ThicknessReport rep = regional_thickness(t, mask, labels);
  REQUIRE(rep.regions.size() == 2);
  CHECK(rep.regions[0].label == 7);
  CHECK(rep.regions[0].mean_mm == doctest::Approx(2.0));
  CHECK(rep.regions[0].count == 2);
  CHECK(rep.regions[1].label == 9);
  CHECK(rep.regions[1].mean_mm == doctest::Approx(4.0));
  CHECK(rep.global_mean_mm == doctest::Approx(3.0));
  CHECK(rep.global_count == 4);

  SUBCASE("single label covering the whole interface reproduces the global mean") {
    labels.labels = {3, 3, 3, 3};
    ThicknessReport rep2 = regional_thickness(t, mask, labels);
    REQUIRE(rep2.regions.size() == 1);
    CHECK(rep2.regions[0].mean_mm == doctest::Approx(rep2.global_mean_mm));
    CHECK(rep2.regions[0].count == rep2.global_count);
  }
  SUBCASE("background voxels count globally but form no region") {
    labels.labels = {0, 0, 9, 9};
    ThicknessReport rep3 = regional_thickness(t, mask, labels);
    REQUIRE(rep3.regions.size() == 1);
    CHECK(rep3.regions[0].label == 9);
    CHECK(rep3.global_count == 4);
  }
  SUBCASE("labels absent from the interface do not appear") {
    mask.mask = {1, 1, 0, 0};
    labels.labels = {7, 7, 9, 9};
    ThicknessReport rep4 = regional_thickness(t, mask, labels);
    REQUIRE(rep4.regions.size() == 1);
    CHECK(rep4.regions[0].label == 7);
  }
}

TEST_CASE("global statistics are invariant under relabeling") {
  PhantomSpec spec;
  spec.dims = {10, 10, 24};
  spec.wm_extent_vox = 9.5;
  PhantomInstance inst = make_phantom(spec);
  GwiMask mask = extract_gwi(inst.wm, gm_from(inst));
  VectorField phi_neg = testing::smooth_random_field(inst.wm.meta, 888, 2.0);
  ScalarVolume t = thickness_map(phi_neg, mask);

  LabelVolume one(inst.wm.meta, 1);
  LabelVolume shuffled(inst.wm.meta);
  for (std::size_t i = 0; i < shuffled.labels.size(); ++i)
    shuffled.labels[i] = 1 + static_cast<std::uint32_t>(i % 5);
  ThicknessReport a = regional_thickness(t, mask, one);
  ThicknessReport b = regional_thickness(t, mask, shuffled);
  CHECK(a.global_mean_mm == doctest::Approx(b.global_mean_mm).epsilon(1e-12));
  CHECK(a.global_std_mm == doctest::Approx(b.global_std_mm).epsilon(1e-12));
  CHECK(a.global_count == b.global_count);
}

TEST_CASE("report serialization uses the documented CSV schema") {
  const GridMeta meta = make_meta(4, 1, 1);
  GwiMask mask;
  mask.meta = meta;
  mask.mask = {1, 1, 1, 1};
  ScalarVolume t(meta);
  t.data = {2.0, 2.0, 4.0, 4.0};
  LabelVolume labels(meta);
  labels.labels = {7, 7, 9, 9};
  ThicknessReport rep = regional_thickness(t, mask, labels);

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "corthick_thickness_tests";
  fs::create_directories(dir);
  const std::string csv = (dir / "report.csv").string();
  write_report_csv(rep, csv);
  std::ifstream in(csv);
  std::string line;
  REQUIRE(static_cast<bool>(std::getline(in, line)));
  CHECK(line == "label,mean_mm,std_mm,count");
  REQUIRE(static_cast<bool>(std::getline(in, line)));
  CHECK(line == "7,2,0,2");
  REQUIRE(static_cast<bool>(std::getline(in, line)));
  CHECK(line == "9,4,0,2");

  const std::string js = (dir / "report.json").string();
  write_report_json(rep, js);
  std::ifstream jin(js);
  std::stringstream ss;
  ss << jin.rdbuf();
  const auto parsed = nlohmann::json::parse(ss.str());
  CHECK(parsed["global"]["mean_mm"].get<double>() == 3.0);
  CHECK(parsed["regions"].size() == 2);
}

TEST_CASE("thresholds outside (0,1) are rejected") {
  GwiThresholds thr;
  thr.wm = 0.0;
  CHECK_THROWS(thr.validate());
  thr.wm = 0.5;
  thr.gm = 1.0;
  CHECK_THROWS(thr.validate());
}

TEST_SUITE_END();
