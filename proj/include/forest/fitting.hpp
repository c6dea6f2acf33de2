#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "forest/geometry.hpp"
#include "forest/point_cloud.hpp"

namespace forest {

struct CircleFit {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
  double rms_residual = 0.0;
  std::size_t inlier_count = 0;
};

/// Algebraic seed followed by geometric Gauss-Newton on the sum of squared
/// radial distances. Throws DegenerateCluster for < 3 points or points
/// collinear within tolerance.
CircleFit least_squares_circle(const std::vector<double>& xs,
                               const std::vector<double>& ys);

struct HoughParams {
  double r_min = 0.025;
  double r_max = 1.0;
  double center_step = 0.02;
  double radius_step = 0.01;
};

struct HoughDiagnostics {
  // Raw peak cell parameters, with rms and inlier count over the same
  // 2*radius_step band the refinement uses.
  CircleFit voted;
  std::uint32_t peak_votes = 0;
  // Number of radius bins whose best center cell collects at least 80% of
  // the peak votes. A well determined radius concentrates support in one or
  // two bins; a short arc admits a whole family of osculating circles, so
  // near-peak support smears across many radii.
  std::size_t radius_support_bins = 0;
};

/// 3-parameter Hough vote over (cx, cy, r). Center cells tile the point
/// bounding box dilated by r_max; the peak cell (ties: lowest radius, then
/// cy, then cx) is refined by least_squares_circle on the points within
/// 2*radius_step of the voted circle. The refined parameters are kept only
/// when they do not increase the least-squares objective on those inliers.
/// When `diag` is non-null it receives the raw peak parameters plus vote
/// concentration measures that callers can use to judge how well the data
/// actually pin down the radius.
CircleFit hough_circle(const std::vector<double>& xs,
                       const std::vector<double>& ys, const HoughParams& params,
                       HoughDiagnostics* diag = nullptr);

/// Angular span covered by points as seen from (cx, cy): 360 minus the
/// largest angular gap between consecutive points, in degrees.
double arc_coverage_deg(const std::vector<double>& xs,
                        const std::vector<double>& ys, double cx, double cy);

struct CylinderFit {
  Vec3 axis_point = Vec3::Zero();      // on the axis, at the centroid height
  Vec3 axis_direction = Vec3::UnitZ();  // unit, z component positive
  double radius = 0.0;
  double rms_residual = 0.0;
};

/// Gauss-Newton cylinder fit for near-vertical stems: the axis is
/// parameterized as the line through (x0, y0, z_centroid) with direction
/// (a, b, 1) normalized, initialized vertical. Throws DegenerateGeometry
/// for < 10 points, < 0.5 m vertical extent, or unsolvable normal
/// equations.
CylinderFit fit_cylinder(const PointCloud& stem);

/// Keeps candidates in order of (inlier_count desc, rms asc, cx asc, cy
/// asc), dropping any whose center lies within `radius` of a kept center.
std::vector<CircleFit> non_maxima_suppression(std::vector<CircleFit> candidates,
                                              double radius);

}  // namespace forest
