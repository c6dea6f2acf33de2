#include "forest/inventory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "forest/error.hpp"

namespace forest {
namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

double parse_field_double(const std::string& s, const std::string& path) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw MalformedHeader("bad numeric field '" + s + "' in " + path);
  return v;
}

}  // namespace

double dbh_std_cm(const TreeInstance& tree) {
  if (tree.weight_sum <= 0.0) return 0.0;
  double mean = tree.dbh_cm;
  double var = tree.dbh_sq_weighted / tree.weight_sum - mean * mean;
  return std::sqrt(std::max(0.0, var));
}

void associate(ForestInventory& inventory,
               const std::vector<TreeDetection>& detections,
               double association_radius_m) {
  if (!(association_radius_m > 0.0)) {
    throw Error("association radius must be positive");
  }
  std::vector<TreeDetection> ordered = detections;
  std::sort(ordered.begin(), ordered.end(),
            [](const TreeDetection& a, const TreeDetection& b) {
              if (a.x != b.x) return a.x < b.x;
              return a.y < b.y;
            });

  int next_id = 0;
  for (const TreeInstance& t : inventory.trees) next_id = std::max(next_id, t.tree_id);

  for (const TreeDetection& det : ordered) {
    TreeInstance* nearest = nullptr;
    double nearest_dist = std::numeric_limits<double>::infinity();
    for (TreeInstance& t : inventory.trees) {
      double dx = det.x - t.x;
      double dy = det.y - t.y;
      double dist = std::sqrt(dx * dx + dy * dy);
      if (dist <= association_radius_m && dist < nearest_dist) {
        nearest_dist = dist;
        nearest = &t;
      }
    }
    double w = static_cast<double>(std::max<std::size_t>(det.support, 1));
    if (nearest) {
      double total = nearest->weight_sum + w;
      nearest->x = (nearest->x * nearest->weight_sum + det.x * w) / total;
      nearest->y = (nearest->y * nearest->weight_sum + det.y * w) / total;
      nearest->dbh_cm = (nearest->dbh_cm * nearest->weight_sum + det.dbh_cm * w) / total;
      nearest->rms_residual_cm =
          (nearest->rms_residual_cm * nearest->weight_sum + 100.0 * det.fit.rms_residual * w) /
          total;
      nearest->dbh_sq_weighted += det.dbh_cm * det.dbh_cm * w;
      nearest->weight_sum = total;
      nearest->observations += 1;
      nearest->first_seen = std::min(nearest->first_seen, det.payload_id);
      nearest->last_seen = std::max(nearest->last_seen, det.payload_id);
    } else {
      TreeInstance t;
      t.tree_id = ++next_id;
      t.x = det.x;
      t.y = det.y;
      t.dbh_cm = det.dbh_cm;
      t.observations = 1;
      t.first_seen = det.payload_id;
      t.last_seen = det.payload_id;
      t.rms_residual_cm = 100.0 * det.fit.rms_residual;
      t.weight_sum = w;
      t.dbh_sq_weighted = det.dbh_cm * det.dbh_cm * w;
      inventory.trees.push_back(t);
    }
  }
  std::sort(inventory.trees.begin(), inventory.trees.end(),
            [](const TreeInstance& a, const TreeInstance& b) { return a.tree_id < b.tree_id; });
}

void export_csv(const ForestInventory& inventory, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  out << "tree_id,x,y,dbh_cm,observations,rms_residual_cm,first_seen,last_seen\n";
  for (const TreeInstance& t : inventory.trees) {
    out << t.tree_id << ',' << fixed(t.x, 6) << ',' << fixed(t.y, 6) << ','
        << fixed(t.dbh_cm, 2) << ',' << t.observations << ','
        << fixed(t.rms_residual_cm, 2) << ',' << t.first_seen << ',' << t.last_seen
        << "\n";
  }
  if (!out) throw IoFailure("write failed: " + path);
}

ForestInventory import_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw MalformedHeader("empty inventory csv " + path);
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  if (line != "tree_id,x,y,dbh_cm,observations,rms_residual_cm,first_seen,last_seen") {
    throw MalformedHeader("unexpected inventory csv header: " + line);
  }
  ForestInventory inventory;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv_row(line);
    if (f.size() != 8) {
      throw MalformedHeader("inventory row has " + std::to_string(f.size()) + " fields");
    }
    TreeInstance t;
    t.tree_id = static_cast<int>(parse_field_double(f[0], path));
    t.x = parse_field_double(f[1], path);
    t.y = parse_field_double(f[2], path);
    t.dbh_cm = parse_field_double(f[3], path);
    t.observations = static_cast<int>(parse_field_double(f[4], path));
    t.rms_residual_cm = parse_field_double(f[5], path);
    t.first_seen = static_cast<int>(parse_field_double(f[6], path));
    t.last_seen = static_cast<int>(parse_field_double(f[7], path));
    t.weight_sum = static_cast<double>(t.observations);
    t.dbh_sq_weighted = t.dbh_cm * t.dbh_cm * t.weight_sum;
    inventory.trees.push_back(t);
  }
  std::sort(inventory.trees.begin(), inventory.trees.end(),
            [](const TreeInstance& a, const TreeInstance& b) { return a.tree_id < b.tree_id; });
  return inventory;
}

void export_geojson(const ForestInventory& inventory, const std::string& path) {
  using json = nlohmann::ordered_json;
  json root;
  root["type"] = "FeatureCollection";
  root["features"] = json::array();
  for (const TreeInstance& t : inventory.trees) {
    json feature;
    feature["type"] = "Feature";
    feature["geometry"]["type"] = "Point";
    feature["geometry"]["coordinates"] = {std::stod(fixed(t.x, 6)), std::stod(fixed(t.y, 6))};
    json& props = feature["properties"];
    props["tree_id"] = t.tree_id;
    props["dbh_cm"] = std::stod(fixed(t.dbh_cm, 2));
    props["observations"] = t.observations;
    props["rms_residual_cm"] = std::stod(fixed(t.rms_residual_cm, 2));
    props["first_seen"] = t.first_seen;
    props["last_seen"] = t.last_seen;
    root["features"].push_back(std::move(feature));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  out << root.dump();
  if (!out) throw IoFailure("write failed: " + path);
}

void export_flags_csv(const ForestInventory& inventory, const std::string& path,
                      double threshold_cm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  out << "tree_id,flag\n";
  for (const TreeInstance& t : inventory.trees) {
    if (dbh_std_cm(t) > threshold_cm) {
      out << t.tree_id << ",high_dbh_variance\n";
    }
  }
  if (!out) throw IoFailure("write failed: " + path);
}

}  // namespace forest
