#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <random>
#include <vector>

#include "forest/error.hpp"
#include "forest/synth.hpp"
#include "forest/terrain.hpp"

using namespace forest;
namespace fs = std::filesystem;

namespace {

PointCloud grid_cloud(double extent, double spacing, auto&& height) {
  PointCloud cloud;
  for (double x = 0.0; x <= extent + 1e-9; x += spacing) {
    for (double y = 0.0; y <= extent + 1e-9; y += spacing) {
      cloud.points.push_back(Point3{x, y, height(x, y), {}, {}, {}});
    }
  }
  return cloud;
}

std::vector<char> all_ground(const PointCloud& cloud) {
  return std::vector<char>(cloud.size(), 1);
}

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "forest_terrain_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("flat ground is classified completely and an outlier is not") {
  PointCloud cloud = grid_cloud(10.0, 0.25, [](double, double) { return 0.0; });
  const std::size_t outlier = cloud.size();
  cloud.points.push_back(Point3{5.0, 5.0, 5.0, {}, {}, {}});

  const ClothResult result = cloth_filter(cloud, ClothParams{});
  REQUIRE(result.ground_mask.size() == cloud.size());
  CHECK(result.converged);
  for (std::size_t i = 0; i < outlier; ++i) {
    CAPTURE(i);
    CHECK(result.ground_mask[i] == 1);
  }
  CHECK(result.ground_mask[outlier] == 0);
}

TEST_CASE("ground precision and recall reach 0.98 on a synthetic forest") {
  SynthConfig config;
  config.seed = 5;
  config.n_trees = 10;
  config.area_w_m = 40.0;
  config.area_h_m = 40.0;
  config.points_per_tree = 1000;
  config.ground_density = 30.0;
  const SynthResult synth = synth_forest(config);

  const ClothResult result = cloth_filter(synth.cloud, ClothParams{});
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  for (std::size_t i = 0; i < synth.cloud.size(); ++i) {
    const bool truth =
        synth.cloud.points[i].semantic == SemanticLabel::Ground;
    const bool predicted = result.ground_mask[i] == 1;
    tp += truth && predicted;
    fp += !truth && predicted;
    fn += truth && !predicted;
  }
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  CAPTURE(precision);
  CAPTURE(recall);
  CHECK(precision >= 0.98);
  CHECK(recall >= 0.98);
}

TEST_CASE("dtm of a constant field is exact") {
  const PointCloud cloud =
      grid_cloud(8.0, 0.2, [](double, double) { return 2.0; });
  const Dtm dtm = build_dtm(cloud, all_ground(cloud), 0.5, 0.25);
  REQUIRE(dtm.width > 0);
  for (std::size_t iy = 0; iy < dtm.height; ++iy) {
    for (std::size_t ix = 0; ix < dtm.width; ++ix) {
      CHECK(dtm.at(ix, iy) == 2.0);
    }
  }
}

TEST_CASE("dtm of a sloped plane stays within the half-cell slope bound") {
  const double ax = 0.1;
  const double by = 0.05;
  const double resolution = 0.25;
  const PointCloud cloud = grid_cloud(
      10.0, 0.05, [&](double x, double y) { return ax * x + by * y + 1.0; });
  const Dtm dtm = build_dtm(cloud, all_ground(cloud), resolution, 0.0);

  const double bound = (std::abs(ax) + std::abs(by)) * resolution / 2.0 + 1e-12;
  for (std::size_t iy = 0; iy < dtm.height; ++iy) {
    for (std::size_t ix = 0; ix < dtm.width; ++ix) {
      if (!dtm.has_data(ix, iy)) continue;
      const double cx = dtm.origin_x + (static_cast<double>(ix) + 0.5) * resolution;
      const double cy = dtm.origin_y + (static_cast<double>(iy) + 0.5) * resolution;
      const double expected = ax * cx + by * cy + 1.0;
      CHECK(std::abs(dtm.at(ix, iy) - expected) <= bound);
    }
  }
}

TEST_CASE("nearest-neighbor fill propagates a single sample within the radius") {
  PointCloud cloud;
  cloud.points.push_back(Point3{2.05, 2.05, 3.5, {}, {}, {}});
  // A second far-away point widens the raster without feeding nearby cells.
  cloud.points.push_back(Point3{6.05, 6.05, 1.0, {}, {}, {}});
  const Dtm dtm = build_dtm(cloud, all_ground(cloud), 0.1, 0.35);

  const std::size_t cx = dtm.col_of(2.05);
  const std::size_t cy = dtm.row_of(2.05);
  CHECK(dtm.at(cx, cy) == 3.5);
  CHECK(dtm.at(cx + 3, cy) == 3.5);   // 0.3 m away, inside the fill radius
  CHECK_FALSE(dtm.has_data(cx + 20, cy));
}

TEST_CASE("empty ground mask raises NoGroundPoints") {
  const PointCloud cloud = grid_cloud(2.0, 0.5, [](double, double) { return 0.0; });
  CHECK_THROWS_AS(build_dtm(cloud, std::vector<char>(cloud.size(), 0), 0.5, 0.25),
                  NoGroundPoints);
  CHECK_THROWS_AS(build_dtm(cloud, std::vector<char>(3, 1), 0.5, 0.25), Error);
}

TEST_CASE("height normalization subtracts the surface exactly on flat data") {
  const PointCloud cloud =
      grid_cloud(6.0, 0.2, [](double, double) { return 2.0; });
  const Dtm dtm = build_dtm(cloud, all_ground(cloud), 0.5, 0.25);
  const NormalizeResult result = normalize_heights(cloud, dtm);
  CHECK(result.excluded == 0);
  REQUIRE(result.cloud.size() == cloud.size());
  for (const Point3& p : result.cloud.points) {
    CHECK(p.z == 0.0);
  }

  // Re-normalizing already-normalized data against a zero surface is the
  // identity.
  Dtm zero = dtm;
  for (double& h : zero.heights) h = 0.0;
  const NormalizeResult again = normalize_heights(result.cloud, zero);
  for (std::size_t i = 0; i < again.cloud.size(); ++i) {
    CHECK(again.cloud.points[i].z == result.cloud.points[i].z);
  }
}

TEST_CASE("points over no-data cells are excluded and counted") {
  PointCloud ground;
  ground.points.push_back(Point3{0.05, 0.05, 1.0, {}, {}, {}});
  ground.points.push_back(Point3{9.05, 9.05, 1.0, {}, {}, {}});
  const Dtm dtm = build_dtm(ground, all_ground(ground), 0.1, 0.2);

  PointCloud query;
  query.points.push_back(Point3{0.05, 0.05, 2.0, {}, {}, {}});
  query.points.push_back(Point3{5.0, 5.0, 2.0, {}, {}, {}});  // no data here
  const NormalizeResult result = normalize_heights(query, dtm);
  CHECK(result.excluded == 1);
  REQUIRE(result.cloud.size() == 1);
  CHECK(result.kept == std::vector<std::size_t>{0});
  CHECK(result.cloud.points[0].z == 1.0);
}

TEST_CASE("translating the scene translates the classification") {
  SynthConfig config;
  config.seed = 9;
  config.n_trees = 4;
  config.area_w_m = 20.0;
  config.area_h_m = 20.0;
  config.points_per_tree = 500;
  config.ground_density = 25.0;
  const SynthResult synth = synth_forest(config);

  PointCloud shifted = synth.cloud;
  const double dx = 128.0;
  const double dy = -64.0;
  const double dz = 32.0;
  for (Point3& p : shifted.points) {
    p.x += dx;
    p.y += dy;
    p.z += dz;
  }

  const ClothParams params;
  const ClothResult base = cloth_filter(synth.cloud, params);
  const ClothResult moved = cloth_filter(shifted, params);
  CHECK(base.ground_mask == moved.ground_mask);

  const Dtm base_dtm = build_dtm(synth.cloud, base.ground_mask, 0.5, 0.25);
  const Dtm moved_dtm = build_dtm(shifted, moved.ground_mask, 0.5, 0.25);
  REQUIRE(base_dtm.width == moved_dtm.width);
  REQUIRE(base_dtm.height == moved_dtm.height);
  for (std::size_t i = 0; i < base_dtm.heights.size(); ++i) {
    const double a = base_dtm.heights[i];
    const double b = moved_dtm.heights[i];
    if (std::isnan(a) || std::isnan(b)) {
      CHECK(std::isnan(a));
      CHECK(std::isnan(b));
    } else {
      CHECK(std::abs(b - (a + dz)) < 1e-9);
    }
  }
}

TEST_CASE("a larger classification threshold only adds ground points") {
  SynthConfig config;
  config.seed = 13;
  config.n_trees = 5;
  config.area_w_m = 20.0;
  config.area_h_m = 20.0;
  config.points_per_tree = 500;
  config.ground_density = 15.0;
  const SynthResult synth = synth_forest(config);

  ClothParams tight;
  tight.classification_threshold_m = 0.05;
  ClothParams loose;
  loose.classification_threshold_m = 0.2;
  const ClothResult a = cloth_filter(synth.cloud, tight);
  const ClothResult b = cloth_filter(synth.cloud, loose);
  for (std::size_t i = 0; i < synth.cloud.size(); ++i) {
    if (a.ground_mask[i]) CHECK(b.ground_mask[i]);
  }
}

TEST_CASE("iteration cap reports non-convergence instead of failing") {
  PointCloud cloud = grid_cloud(10.0, 0.25, [](double, double) { return 0.0; });
  ClothParams params;
  params.max_iterations = 1;
  const ClothResult result = cloth_filter(cloud, params);
  CHECK_FALSE(result.converged);
  CHECK(result.ground_mask.size() == cloud.size());
}

TEST_CASE("esri ascii grid round-trips including no-data cells") {
  PointCloud cloud;
  cloud.points.push_back(Point3{0.05, 0.05, 1.25, {}, {}, {}});
  cloud.points.push_back(Point3{3.05, 2.05, -0.75, {}, {}, {}});
  const Dtm dtm = build_dtm(cloud, all_ground(cloud), 0.1, 0.15);

  const fs::path path = temp_file("grid.asc");
  write_esri_asc(dtm, path.string());
  const Dtm back = read_esri_asc(path.string());

  CHECK(back.width == dtm.width);
  CHECK(back.height == dtm.height);
  CHECK(back.origin_x == dtm.origin_x);
  CHECK(back.origin_y == dtm.origin_y);
  CHECK(back.resolution == dtm.resolution);
  REQUIRE(back.heights.size() == dtm.heights.size());
  for (std::size_t i = 0; i < dtm.heights.size(); ++i) {
    if (std::isnan(dtm.heights[i])) {
      CHECK(std::isnan(back.heights[i]));
    } else {
      CHECK(back.heights[i] == dtm.heights[i]);
    }
  }
}

TEST_CASE("bilinear height interpolation between cell centers") {
  Dtm dtm;
  dtm.origin_x = 0.0;
  dtm.origin_y = 0.0;
  dtm.resolution = 1.0;
  dtm.width = 2;
  dtm.height = 2;
  dtm.heights = {0.0, 1.0, 2.0, 3.0};  // rows: y then x

  // Cell centers are at 0.5 and 1.5; the raster midpoint averages all four.
  CHECK(dtm.height_at(1.0, 1.0) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(dtm.height_at(0.5, 0.5) == 0.0);
  CHECK(dtm.height_at(1.5, 0.5) == 1.0);
  // Clamped outside the center lattice.
  CHECK(dtm.height_at(0.0, 0.5) == 0.0);
  CHECK(dtm.height_at(2.0, 1.9) == 3.0);
}
