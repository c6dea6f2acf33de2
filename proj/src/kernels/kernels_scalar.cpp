#include <cmath>
#include <cstddef>
#include <limits>

#include "forest/kernels.hpp"

// Scalar reference kernels. These spell out the same 4-lane accumulation
// pattern the AVX2 variants use, which is what makes the backends
// bit-identical: lane k owns elements 4*i+k, lanes combine as
// (l0+l1)+(l2+l3), and the tail is folded in afterwards in index order.

namespace forest::kernels {
namespace {

// vminpd/vmaxpd semantics: return the second operand on equality.
inline double lane_min(double a, double b) { return a < b ? a : b; }
inline double lane_max(double a, double b) { return a > b ? a : b; }

void transform_points_scalar(std::size_t n, const double* xs, const double* ys, const double* zs,
                             const double* rot, const double* trans,
                             double* ox, double* oy, double* oz) {
  for (std::size_t i = 0; i < n; ++i) {
    const double x = xs[i], y = ys[i], z = zs[i];
    const double nx = ((rot[0] * x + rot[1] * y) + (rot[2] * z + trans[0]));
    const double ny = ((rot[3] * x + rot[4] * y) + (rot[5] * z + trans[1]));
    const double nz = ((rot[6] * x + rot[7] * y) + (rot[8] * z + trans[2]));
    ox[i] = nx;
    oy[i] = ny;
    oz[i] = nz;
  }
}

void radial_distances_scalar(std::size_t n, const double* xs, const double* ys,
                             double cx, double cy, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - cx;
    const double dy = ys[i] - cy;
    out[i] = std::sqrt(dx * dx + dy * dy);
  }
}

void radial_distances_row_scalar(std::size_t n, const double* xs, double y,
                                 double cx, double cy, double* out) {
  const double dy = y - cy;
  const double dy2 = dy * dy;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - cx;
    out[i] = std::sqrt(dx * dx + dy2);
  }
}

void squared_distances_xy_scalar(std::size_t n, const double* xs, const double* ys,
                                 double px, double py, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - px;
    const double dy = ys[i] - py;
    out[i] = dx * dx + dy * dy;
  }
}

void minmax_xy_scalar(std::size_t n, const double* xs, const double* ys,
                      double& xmin, double& xmax, double& ymin, double& ymax) {
  double lxmin[4], lxmax[4], lymin[4], lymax[4];
  for (int k = 0; k < 4; ++k) {
    lxmin[k] = lymin[k] = std::numeric_limits<double>::infinity();
    lxmax[k] = lymax[k] = -std::numeric_limits<double>::infinity();
  }
  const std::size_t n4 = n / 4 * 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    for (int k = 0; k < 4; ++k) {
      lxmin[k] = lane_min(lxmin[k], xs[i + k]);
      lxmax[k] = lane_max(lxmax[k], xs[i + k]);
      lymin[k] = lane_min(lymin[k], ys[i + k]);
      lymax[k] = lane_max(lymax[k], ys[i + k]);
    }
  }
  double mnx = lane_min(lane_min(lxmin[0], lxmin[1]), lane_min(lxmin[2], lxmin[3]));
  double mxx = lane_max(lane_max(lxmax[0], lxmax[1]), lane_max(lxmax[2], lxmax[3]));
  double mny = lane_min(lane_min(lymin[0], lymin[1]), lane_min(lymin[2], lymin[3]));
  double mxy = lane_max(lane_max(lymax[0], lymax[1]), lane_max(lymax[2], lymax[3]));
  for (std::size_t i = n4; i < n; ++i) {
    mnx = lane_min(mnx, xs[i]);
    mxx = lane_max(mxx, xs[i]);
    mny = lane_min(mny, ys[i]);
    mxy = lane_max(mxy, ys[i]);
  }
  xmin = mnx;
  xmax = mxx;
  ymin = mny;
  ymax = mxy;
}

double sum_scalar(std::size_t n, const double* v) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n4 = n / 4 * 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    lane[0] += v[i];
    lane[1] += v[i + 1];
    lane[2] += v[i + 2];
    lane[3] += v[i + 3];
  }
  double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t i = n4; i < n; ++i) s += v[i];
  return s;
}

double sum_squares_scalar(std::size_t n, const double* v) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n4 = n / 4 * 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    lane[0] += v[i] * v[i];
    lane[1] += v[i + 1] * v[i + 1];
    lane[2] += v[i + 2] * v[i + 2];
    lane[3] += v[i + 3] * v[i + 3];
  }
  double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t i = n4; i < n; ++i) s += v[i] * v[i];
  return s;
}

}  // namespace

namespace detail {

const Vtable& scalar_vtable() {
  static const Vtable table = {
      &transform_points_scalar,     &radial_distances_scalar,
      &radial_distances_row_scalar, &squared_distances_xy_scalar,
      &minmax_xy_scalar,            &sum_scalar,
      &sum_squares_scalar,
  };
  return table;
}

}  // namespace detail
}  // namespace forest::kernels
