#include "forest/payload.hpp"

#include <algorithm>
#include <cmath>

#include "forest/error.hpp"

namespace forest {
namespace {

void validate_trajectory(const Trajectory& trajectory) {
  if (trajectory.samples.empty()) {
    throw Error("trajectory has no samples");
  }
  for (std::size_t i = 1; i < trajectory.samples.size(); ++i) {
    if (!(trajectory.samples[i - 1].timestamp < trajectory.samples[i].timestamp)) {
      throw Error("trajectory timestamps must be strictly increasing");
    }
  }
}

// Index of the last sample with timestamp <= t; requires t within span.
std::size_t lower_sample(const Trajectory& trajectory, double t) {
  const auto& s = trajectory.samples;
  auto it = std::upper_bound(
      s.begin(), s.end(), t,
      [](double value, const Trajectory::Sample& sample) { return value < sample.timestamp; });
  return static_cast<std::size_t>(it - s.begin()) - 1;
}

}  // namespace

Pose Trajectory::pose_at(double t) const {
  if (samples.empty()) throw Error("trajectory has no samples");
  if (t < samples.front().timestamp || t > samples.back().timestamp) {
    throw TimestampOutOfRange("timestamp " + std::to_string(t) +
                              " outside trajectory span");
  }
  if (t == samples.back().timestamp) return samples.back().pose;
  std::size_t i = lower_sample(*this, t);
  const Sample& a = samples[i];
  const Sample& b = samples[i + 1];
  if (t == a.timestamp) return a.pose;
  double alpha = (t - a.timestamp) / (b.timestamp - a.timestamp);
  return interpolate(a.pose, b.pose, alpha);
}

double Trajectory::arc_length(double t0, double t1) const {
  if (t1 < t0) std::swap(t0, t1);
  Vec3 prev = pose_at(t0).translation;
  std::size_t i = lower_sample(*this, t0) + 1;
  double total = 0.0;
  while (i < samples.size() && samples[i].timestamp < t1) {
    total += (samples[i].pose.translation - prev).norm();
    prev = samples[i].pose.translation;
    ++i;
  }
  total += (pose_at(t1).translation - prev).norm();
  return total;
}

std::vector<PayloadCloud> build_payloads(const std::vector<ScanFrame>& scans,
                                         const Trajectory& trajectory,
                                         double window_m) {
  if (!(window_m > 0.0)) {
    throw Error("payload window must be positive");
  }
  validate_trajectory(trajectory);

  std::vector<PayloadCloud> payloads;
  if (scans.empty()) return payloads;

  PointCloud pending;
  Pose anchor;
  std::size_t pending_scans = 0;
  std::size_t cuts = 0;
  double traveled = 0.0;
  double prev_time = scans.front().timestamp;

  for (const ScanFrame& scan : scans) {
    if (scan.timestamp < prev_time) {
      throw Error("scan timestamps must be non-decreasing");
    }
    Pose pose = trajectory.pose_at(scan.timestamp);
    traveled += trajectory.arc_length(prev_time, scan.timestamp);
    prev_time = scan.timestamp;

    if (pending_scans == 0) {
      anchor.translation = pose.translation;
      anchor.rotation = Eigen::Quaterniond::Identity();
      pending.frame_id = scan.cloud.frame_id;
    }
    PointCloud world = apply_pose(scan.cloud, pose);
    for (Point3 p : world.points) {
      p.x -= anchor.translation.x();
      p.y -= anchor.translation.y();
      p.z -= anchor.translation.z();
      pending.points.push_back(p);
    }
    ++pending_scans;

    // Cut against absolute multiples of the window so emission points stay
    // within one scan's travel of k*window instead of drifting.
    if (traveled >= static_cast<double>(cuts + 1) * window_m) {
      ++cuts;
      payloads.push_back(PayloadCloud{std::move(pending), anchor, traveled,
                                      scan.timestamp});
      pending = PointCloud{};
      pending_scans = 0;
    }
  }
  if (pending_scans > 0) {
    payloads.push_back(
        PayloadCloud{std::move(pending), anchor, traveled, prev_time});
  }
  return payloads;
}

}  // namespace forest
