#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "forest/error.hpp"
#include "forest/inventory.hpp"

using namespace forest;

namespace {

TreeDetection make_det(double x, double y, double dbh_cm, int payload_id = 0,
                       std::size_t support = 1, double rms_m = 0.01) {
  TreeDetection det;
  det.x = x;
  det.y = y;
  det.dbh_cm = dbh_cm;
  det.payload_id = payload_id;
  det.support = support;
  det.fit.cx = x;
  det.fit.cy = y;
  det.fit.radius = dbh_cm / 200.0;
  det.fit.rms_residual = rms_m;
  det.fit.inlier_count = support;
  return det;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("separated detections become distinct trees") {
  ForestInventory inv;
  associate(inv, {make_det(10.0, 0.0, 25.0), make_det(0.0, 0.0, 30.0),
                  make_det(5.0, 0.0, 35.0)},
            0.5);
  REQUIRE(inv.trees.size() == 3);
  // Ids follow the (x, y) processing order.
  CHECK(inv.trees[0].tree_id == 1);
  CHECK(inv.trees[0].x == 0.0);
  CHECK(inv.trees[0].dbh_cm == 30.0);
  CHECK(inv.trees[1].x == 5.0);
  CHECK(inv.trees[2].x == 10.0);
  for (const TreeInstance& t : inv.trees) {
    CHECK(t.observations == 1);
  }
}

TEST_CASE("a repeat sighting updates the tree instead of duplicating it") {
  ForestInventory inv;
  associate(inv, {make_det(1.0, 1.0, 30.0, 0)}, 0.5);
  associate(inv, {make_det(1.1, 1.0, 32.0, 1)}, 0.5);
  REQUIRE(inv.trees.size() == 1);
  CHECK(inv.trees[0].observations == 2);
  CHECK(inv.trees[0].dbh_cm == 31.0);  // equal weights average exactly
  CHECK(inv.trees[0].first_seen == 0);
  CHECK(inv.trees[0].last_seen == 1);
}

TEST_CASE("merging weights observations by their support") {
  ForestInventory inv;
  associate(inv, {make_det(0.0, 0.0, 30.0, 0, 10, 0.01)}, 0.5);
  associate(inv, {make_det(0.2, 0.0, 32.0, 1, 30, 0.02)}, 0.5);
  REQUIRE(inv.trees.size() == 1);
  const TreeInstance& t = inv.trees[0];
  CHECK(t.dbh_cm == doctest::Approx((30.0 * 10 + 32.0 * 30) / 40.0).epsilon(1e-12));
  CHECK(t.x == doctest::Approx(0.2 * 30 / 40.0).epsilon(1e-12));
  CHECK(t.rms_residual_cm == doctest::Approx((1.0 * 10 + 2.0 * 30) / 40.0).epsilon(1e-12));
  CHECK(t.weight_sum == 40.0);
}

TEST_CASE("weighted means match a direct computation") {
  ForestInventory inv;
  const std::vector<TreeDetection> dets = {
      make_det(0.00, 0.0, 28.0, 0, 13), make_det(0.05, 0.0, 29.5, 1, 7),
      make_det(0.10, 0.0, 31.0, 2, 22), make_det(0.15, 0.0, 27.5, 3, 5)};
  for (const TreeDetection& d : dets) associate(inv, {d}, 1.0);
  REQUIRE(inv.trees.size() == 1);

  double wsum = 0.0, dbh = 0.0;
  for (const TreeDetection& d : dets) {
    wsum += static_cast<double>(d.support);
    dbh += d.dbh_cm * static_cast<double>(d.support);
  }
  CHECK(std::abs(inv.trees[0].dbh_cm - dbh / wsum) < 1e-12);
  CHECK(inv.trees[0].observations == 4);
}

TEST_CASE("seen-payload bounds track min and max") {
  ForestInventory inv;
  associate(inv, {make_det(0.0, 0.0, 30.0, 2)}, 0.5);
  associate(inv, {make_det(0.0, 0.1, 30.0, 0)}, 0.5);
  associate(inv, {make_det(0.1, 0.0, 30.0, 5)}, 0.5);
  REQUIRE(inv.trees.size() == 1);
  CHECK(inv.trees[0].first_seen == 0);
  CHECK(inv.trees[0].last_seen == 5);
}

TEST_CASE("an equidistant detection merges into the lowest id") {
  ForestInventory inv;
  associate(inv, {make_det(0.0, 0.0, 30.0), make_det(2.0, 0.0, 30.0)}, 0.5);
  REQUIRE(inv.trees.size() == 2);
  associate(inv, {make_det(1.0, 0.0, 36.0)}, 1.5);
  REQUIRE(inv.trees.size() == 2);
  CHECK(inv.trees[0].tree_id == 1);
  CHECK(inv.trees[0].observations == 2);
  CHECK(inv.trees[1].observations == 1);
}

TEST_CASE("association rejects a non-positive radius") {
  ForestInventory inv;
  CHECK_THROWS_AS(associate(inv, {make_det(0, 0, 30.0)}, 0.0), Error);
}

TEST_CASE("dbh deviation is the weighted standard deviation") {
  ForestInventory inv;
  associate(inv, {make_det(0.0, 0.0, 20.0, 0)}, 0.5);
  associate(inv, {make_det(0.0, 0.0, 30.0, 1)}, 0.5);
  REQUIRE(inv.trees.size() == 1);
  CHECK(dbh_std_cm(inv.trees[0]) == doctest::Approx(5.0).epsilon(1e-12));

  TreeInstance fresh;
  CHECK(dbh_std_cm(fresh) == 0.0);
}

TEST_CASE("csv export is stable through a round trip") {
  ForestInventory inv;
  inv.plot_id = "plot";
  associate(inv, {make_det(12.345678, -3.5, 31.456, 0, 40, 0.012),
                  make_det(1.0, 2.0, 25.0, 0, 25, 0.008)},
            0.5);
  associate(inv, {make_det(12.35, -3.51, 30.9, 1, 35, 0.011)}, 0.5);

  const auto p1 = temp_file("forest_inv_rt1.csv");
  const auto p2 = temp_file("forest_inv_rt2.csv");
  export_csv(inv, p1.string());
  const ForestInventory back = import_csv(p1.string());
  REQUIRE(back.trees.size() == inv.trees.size());
  export_csv(back, p2.string());
  CHECK(read_file(p1) == read_file(p2));

  const std::string text = read_file(p1);
  CHECK(text.rfind("tree_id,x,y,dbh_cm,observations,rms_residual_cm,first_seen,last_seen\n",
                   0) == 0);
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("imported inventories keep counting ids from the top") {
  ForestInventory inv;
  associate(inv, {make_det(0.0, 0.0, 30.0), make_det(5.0, 0.0, 28.0)}, 0.5);
  const auto p = temp_file("forest_inv_ids.csv");
  export_csv(inv, p.string());
  ForestInventory back = import_csv(p.string());
  associate(back, {make_det(10.0, 0.0, 26.0)}, 0.5);
  REQUIRE(back.trees.size() == 3);
  CHECK(back.trees[2].tree_id == 3);
  std::filesystem::remove(p);
}

TEST_CASE("csv import rejects malformed input") {
  const auto p = temp_file("forest_inv_bad.csv");
  {
    std::ofstream out(p);
    out << "tree_id,x,y\n1,2,3\n";
  }
  CHECK_THROWS_AS(import_csv(p.string()), MalformedHeader);
  {
    std::ofstream out(p);
    out << "tree_id,x,y,dbh_cm,observations,rms_residual_cm,first_seen,last_seen\n";
    out << "1,2.0,3.0\n";
  }
  CHECK_THROWS_AS(import_csv(p.string()), MalformedHeader);
  {
    std::ofstream out(p);
    out << "tree_id,x,y,dbh_cm,observations,rms_residual_cm,first_seen,last_seen\n";
    out << "1,abc,3.0,30.0,1,1.0,0,0\n";
  }
  CHECK_THROWS_AS(import_csv(p.string()), MalformedHeader);
  std::filesystem::remove(p);
  CHECK_THROWS_AS(import_csv((p.string() + ".missing")), IoFailure);
}

TEST_CASE("an empty inventory serializes to the canonical geojson") {
  ForestInventory inv;
  const auto p = temp_file("forest_inv_empty.geojson");
  export_geojson(inv, p.string());
  CHECK(read_file(p) == "{\"type\":\"FeatureCollection\",\"features\":[]}");
  std::filesystem::remove(p);
}

TEST_CASE("geojson features carry rounded coordinates and properties") {
  ForestInventory inv;
  associate(inv, {make_det(1.2345678, 2.5, 31.456, 3, 12, 0.015)}, 0.5);
  const auto p = temp_file("forest_inv_feat.geojson");
  export_geojson(inv, p.string());
  const nlohmann::json root = nlohmann::json::parse(read_file(p));
  CHECK(root.at("type") == "FeatureCollection");
  REQUIRE(root.at("features").size() == 1);
  const nlohmann::json& f = root.at("features")[0];
  CHECK(f.at("geometry").at("type") == "Point");
  CHECK(f.at("geometry").at("coordinates")[0].get<double>() ==
        doctest::Approx(1.234568).epsilon(1e-12));  // six decimals
  CHECK(f.at("properties").at("tree_id") == 1);
  CHECK(f.at("properties").at("dbh_cm").get<double>() ==
        doctest::Approx(31.46).epsilon(1e-12));
  CHECK(f.at("properties").at("first_seen") == 3);
  CHECK(f.at("properties").at("last_seen") == 3);
  std::filesystem::remove(p);
}

TEST_CASE("only trees with discordant dbh observations are flagged") {
  ForestInventory inv;
  // Tree 1: two sightings 10 cm apart (std 5 cm). Tree 2: consistent.
  associate(inv, {make_det(0.0, 0.0, 20.0, 0), make_det(8.0, 0.0, 25.0, 0)}, 0.5);
  associate(inv, {make_det(0.0, 0.1, 30.0, 1), make_det(8.0, 0.1, 25.0, 1)}, 0.5);
  REQUIRE(inv.trees.size() == 2);

  const auto p = temp_file("forest_inv_flags.csv");
  export_flags_csv(inv, p.string());
  CHECK(read_file(p) == "tree_id,flag\n1,high_dbh_variance\n");

  export_flags_csv(inv, p.string(), 6.0);  // looser threshold clears it
  CHECK(read_file(p) == "tree_id,flag\n");
  std::filesystem::remove(p);
}
