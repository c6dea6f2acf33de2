#include "forest/geometry.hpp"

#include "forest/kernels.hpp"

namespace forest {

PointCloud apply_pose(const PointCloud& cloud, const Pose& pose) {
  Soa3 soa = to_soa(cloud);
  const Eigen::Matrix3d r = pose.rotation.toRotationMatrix();
  // Row-major 3x3.
  const double rot[9] = {r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1),
                         r(1, 2), r(2, 0), r(2, 1), r(2, 2)};
  const double trans[3] = {pose.translation.x(), pose.translation.y(),
                           pose.translation.z()};
  kernels::transform_points(soa.x.size(), soa.x.data(), soa.y.data(),
                            soa.z.data(), rot, trans, soa.x.data(),
                            soa.y.data(), soa.z.data());
  PointCloud out = cloud;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    out.points[i].x = soa.x[i];
    out.points[i].y = soa.y[i];
    out.points[i].z = soa.z[i];
  }
  return out;
}

}  // namespace forest
