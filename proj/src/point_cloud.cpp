#include "forest/point_cloud.hpp"

#include <cmath>

#include "forest/error.hpp"

namespace forest {

Channels cloud_channels(const PointCloud& cloud) {
  Channels ch;
  for (const auto& p : cloud.points) {
    ch.intensity |= p.intensity.has_value();
    ch.semantic |= p.semantic.has_value();
    ch.instance |= p.instance.has_value();
    if (ch.intensity && ch.semantic && ch.instance) break;
  }
  return ch;
}

void validate_cloud(const PointCloud& cloud) {
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Point3& p = cloud.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw NonFiniteCoordinate(i, "non-finite coordinate at point " + std::to_string(i));
    }
    if (p.instance.has_value() && (!p.semantic.has_value() || !is_tree(*p.semantic))) {
      throw Error("point " + std::to_string(i) + " carries an instance id but is not stem/canopy");
    }
  }
}

Soa3 to_soa(const PointCloud& cloud) {
  Soa3 soa;
  soa.x.reserve(cloud.size());
  soa.y.reserve(cloud.size());
  soa.z.reserve(cloud.size());
  for (const auto& p : cloud.points) {
    soa.x.push_back(p.x);
    soa.y.push_back(p.y);
    soa.z.push_back(p.z);
  }
  return soa;
}

void from_soa(const Soa3& soa, PointCloud& cloud) {
  for (std::size_t i = 0; i < soa.size(); ++i) {
    cloud.points[i].x = soa.x[i];
    cloud.points[i].y = soa.y[i];
    cloud.points[i].z = soa.z[i];
  }
}

SemanticLabel label_from_code(int code) {
  if (code < 0 || code > 3) {
    throw UnknownLabelCode(code, "unknown semantic label code " + std::to_string(code));
  }
  return static_cast<SemanticLabel>(code);
}

}  // namespace forest
