#pragma once

#include <vector>

#include "forest/geometry.hpp"
#include "forest/point_cloud.hpp"

namespace forest {

/// One sensor sweep in the sensor frame, stamped with acquisition time.
struct ScanFrame {
  double timestamp = 0.0;
  PointCloud cloud;
};

/// Time-indexed poses of the sensor in the world frame.
/// Timestamps must be strictly increasing.
struct Trajectory {
  struct Sample {
    double timestamp = 0.0;
    Pose pose;
  };
  std::vector<Sample> samples;

  /// Pose at time t, linearly interpolated in translation and
  /// spherical-linearly in rotation. Throws TimestampOutOfRange when t
  /// falls outside the sampled span.
  Pose pose_at(double t) const;

  /// Translational path length along the sampled polyline between two
  /// times (both must lie inside the span; order-insensitive).
  double arc_length(double t0, double t1) const;
};

/// A chunk of the accumulated world map, anchored near where its first
/// scan was taken. Stored coordinates are relative to `pose`; applying
/// `pose` recovers world coordinates with +z up.
struct PayloadCloud {
  PointCloud cloud;
  Pose pose;
  double odometry_distance = 0.0;
  double timestamp = 0.0;
};

/// Accumulates scans into world-frame payloads, cutting each time total
/// travel crosses the next multiple of `window_m`. The final partial
/// payload is emitted whenever at least one scan is pending, so every
/// input point lands in exactly one payload.
std::vector<PayloadCloud> build_payloads(const std::vector<ScanFrame>& scans,
                                         const Trajectory& trajectory,
                                         double window_m);

}  // namespace forest
