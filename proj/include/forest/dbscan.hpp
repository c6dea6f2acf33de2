#pragma once

#include <cstddef>
#include <vector>

#include "forest/point_cloud.hpp"

namespace forest {

struct Cluster {
  std::vector<std::size_t> point_indices;  // ascending, unique
  double cx = 0.0, cy = 0.0, cz = 0.0;     // centroid of member points
};

struct DbscanResult {
  std::vector<int> labels;             // per point: cluster id, -1 for noise
  std::vector<Cluster> clusters;       // indexed by cluster id
  std::vector<std::size_t> noise;      // ascending indices
};

/// Density clustering on the xy projection. A point is core when at least
/// min_pts points (itself included) lie within eps. Clusters are the
/// density-connected components of the core points; each border point joins
/// the cluster of its lowest-index core neighbor. Cluster ids are numbered
/// by ascending lowest core index, so the output is a pure function of the
/// point set.
DbscanResult dbscan_xy(const PointCloud& cloud, double eps, int min_pts);

/// O(n^2) reference used to cross-check the grid implementation.
DbscanResult dbscan_xy_bruteforce(const PointCloud& cloud, double eps, int min_pts);

/// Same clustering over full 3D distances, used for offset-vector
/// instance grouping.
DbscanResult dbscan_xyz(const PointCloud& cloud, double eps, int min_pts);

}  // namespace forest
