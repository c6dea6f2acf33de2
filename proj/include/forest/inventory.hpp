#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "forest/detector.hpp"

namespace forest {

struct TreeInstance {
  int tree_id = 0;  // positive, unique within an inventory
  double x = 0.0;   // support-weighted mean position
  double y = 0.0;
  double dbh_cm = 0.0;  // support-weighted mean
  int observations = 0;
  int first_seen = 0;  // payload ids
  int last_seen = 0;
  double rms_residual_cm = 0.0;  // support-weighted mean fit quality

  // Aggregation state, not exported: total support weight and the weighted
  // sum of squared DBH for the variance flag.
  double weight_sum = 0.0;
  double dbh_sq_weighted = 0.0;
};

/// Weighted standard deviation of the DBH observations merged into a tree.
double dbh_std_cm(const TreeInstance& tree);

struct ForestInventory {
  std::vector<TreeInstance> trees;  // sorted by tree_id
  std::string plot_id;
  std::string crs = "local";
  std::uint64_t config_fingerprint = 0;
};

/// Merges detections into the inventory. Detections are processed in (x, y)
/// order; each one either updates the nearest instance within
/// association_radius (ties: lowest tree_id) by support-weighted means, or
/// becomes a new instance with the next id.
void associate(ForestInventory& inventory,
               const std::vector<TreeDetection>& detections,
               double association_radius_m);

/// CSV schema: tree_id,x,y,dbh_cm,observations,rms_residual_cm,first_seen,
/// last_seen. Meters use 6 decimal places, centimeters 2; rows sorted by
/// tree_id.
void export_csv(const ForestInventory& inventory, const std::string& path);
ForestInventory import_csv(const std::string& path);

/// GeoJSON FeatureCollection of Point features; an empty inventory yields
/// exactly {"type":"FeatureCollection","features":[]}.
void export_geojson(const ForestInventory& inventory, const std::string& path);

/// Advisory sidecar: tree_id,flag rows for trees whose DBH observations
/// disagree (std above threshold_cm).
void export_flags_csv(const ForestInventory& inventory, const std::string& path,
                      double threshold_cm = 3.0);

}  // namespace forest
