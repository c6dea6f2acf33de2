#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "forest/point_cloud.hpp"

namespace forest {

using Vec3 = Eigen::Vector3d;

/// Rigid transform: x_world = rotation * x_local + translation.
struct Pose {
  Vec3 translation = Vec3::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  Pose inverse() const {
    Pose inv;
    inv.rotation = rotation.conjugate();
    inv.translation = -(inv.rotation * translation);
    return inv;
  }

  static Pose identity() { return Pose{}; }
};

/// Linear in translation, spherical-linear in rotation.
inline Pose interpolate(const Pose& a, const Pose& b, double alpha) {
  Pose out;
  out.translation = (1.0 - alpha) * a.translation + alpha * b.translation;
  out.rotation = a.rotation.slerp(alpha, b.rotation).normalized();
  return out;
}

/// Applies a pose to all points through the kernels layer; labels untouched.
PointCloud apply_pose(const PointCloud& cloud, const Pose& pose);

}  // namespace forest
