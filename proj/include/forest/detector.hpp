#pragma once

#include <cstddef>
#include <vector>

#include "forest/config.hpp"
#include "forest/fitting.hpp"
#include "forest/payload.hpp"
#include "forest/point_cloud.hpp"
#include "forest/terrain.hpp"

namespace forest {

struct SliceResult {
  PointCloud cloud;
  std::vector<std::size_t> indices;  // original index of each slice point
};

/// Points with low <= z <= high (closed band), in input order.
SliceResult slice_breast_height(const PointCloud& normalized, double low_m,
                                double high_m);

struct TreeDetection {
  double x = 0.0;  // trunk center at ground level
  double y = 0.0;
  double dbh_cm = 0.0;
  CircleFit fit;
  int payload_id = 0;
  std::size_t support = 0;
};

struct DetectResult {
  std::vector<TreeDetection> detections;
  Dtm dtm;
  std::size_t excluded_points = 0;  // dropped over no-data DTM cells
  bool cloth_converged = true;
};

/// Full single-payload pipeline: ground filtering, DTM, height
/// normalization, breast-height slice, clustering, circle (or cylinder,
/// per config.method) fitting, and non-maxima suppression. Clusters are
/// fitted in parallel; the detection list is sorted by (x, y) before NMS
/// so the result does not depend on thread count.
DetectResult detect_trees(const PayloadCloud& payload,
                          const PipelineConfig& config, int payload_id = 0);

}  // namespace forest
