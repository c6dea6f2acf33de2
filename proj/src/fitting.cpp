#include "forest/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "forest/error.hpp"
#include "forest/kernels.hpp"

namespace forest {
namespace {

struct PlanarStats {
  double mx = 0.0, my = 0.0;
  double lambda_min = 0.0, lambda_max = 0.0;
};

PlanarStats planar_spread(const std::vector<double>& xs, const std::vector<double>& ys) {
  PlanarStats s;
  const std::size_t n = xs.size();
  s.mx = kernels::sum(n, xs.data()) / static_cast<double>(n);
  s.my = kernels::sum(n, ys.data()) / static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = xs[i] - s.mx;
    double dy = ys[i] - s.my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  double inv = 1.0 / static_cast<double>(n);
  sxx *= inv;
  syy *= inv;
  sxy *= inv;
  double tr = sxx + syy;
  double det = sxx * syy - sxy * sxy;
  double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
  s.lambda_max = std::max(0.0, 0.5 * (tr + disc));
  s.lambda_min = std::max(0.0, 0.5 * (tr - disc));
  return s;
}

void require_circle_posed(const std::vector<double>& xs, const std::vector<double>& ys,
                          const PlanarStats& s) {
  if (xs.size() < 3 || ys.size() != xs.size()) {
    throw DegenerateCluster("circle fit needs at least 3 points");
  }
  if (std::sqrt(s.lambda_min) <= 1e-12 + 1e-9 * std::sqrt(s.lambda_max)) {
    throw DegenerateCluster("points are collinear; no circle determinable");
  }
}

double circle_objective(const std::vector<double>& xs, const std::vector<double>& ys,
                        double cx, double cy, double r) {
  std::vector<double> res(xs.size());
  kernels::radial_distances(xs.size(), xs.data(), ys.data(), cx, cy, res.data());
  for (double& v : res) v -= r;
  return kernels::sum_squares(res.size(), res.data());
}

// Least-squares circle fit on data already known to be well posed.
CircleFit fit_circle_posed(const std::vector<double>& xs, const std::vector<double>& ys,
                           const PlanarStats& s) {
  const std::size_t n = xs.size();

  // Algebraic seed (Kasa) on centered coordinates: solve for the circle
  // u^2 + v^2 + a*u + b*v + c = 0 in the least-squares sense.
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    double u = xs[i] - s.mx;
    double v = ys[i] - s.my;
    double w = -(u * u + v * v);
    m(0, 0) += u * u;
    m(0, 1) += u * v;
    m(0, 2) += u;
    m(1, 1) += v * v;
    m(1, 2) += v;
    rhs(0) += u * w;
    rhs(1) += v * w;
    rhs(2) += w;
  }
  m(1, 0) = m(0, 1);
  m(2, 0) = m(0, 2);
  m(2, 1) = m(1, 2);
  m(2, 2) = static_cast<double>(n);
  Eigen::Vector3d abc = m.ldlt().solve(rhs);
  double cx = -0.5 * abc(0);
  double cy = -0.5 * abc(1);
  double r = std::sqrt(std::max(1e-24, 0.25 * (abc(0) * abc(0) + abc(1) * abc(1)) - abc(2)));

  // Geometric Gauss-Newton on sum((|p-c| - r)^2), in centered coordinates.
  auto objective = [&](double ccx, double ccy, double rr) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double dx = (xs[i] - s.mx) - ccx;
      double dy = (ys[i] - s.my) - ccy;
      double res = std::sqrt(dx * dx + dy * dy) - rr;
      total += res * res;
    }
    return total;
  };
  double obj = objective(cx, cy, r);
  for (int iter = 0; iter < 50; ++iter) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      double dx = (xs[i] - s.mx) - cx;
      double dy = (ys[i] - s.my) - cy;
      double d = std::sqrt(dx * dx + dy * dy);
      double safe = std::max(d, 1e-12);
      double res = d - r;
      Eigen::Vector3d j(-dx / safe, -dy / safe, -1.0);
      jtj += j * j.transpose();
      jtr += j * res;
    }
    Eigen::Vector3d step = jtj.ldlt().solve(-jtr);
    if (!step.allFinite()) break;

    double t = 1.0;
    double best_obj = obj;
    double best_cx = cx, best_cy = cy, best_r = r;
    bool improved = false;
    for (int bt = 0; bt < 20; ++bt) {
      double ncx = cx + t * step(0);
      double ncy = cy + t * step(1);
      double nr = r + t * step(2);
      double nobj = objective(ncx, ncy, nr);
      if (nobj < best_obj) {
        best_obj = nobj;
        best_cx = ncx;
        best_cy = ncy;
        best_r = nr;
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) break;
    double moved = std::abs(cx - best_cx) + std::abs(cy - best_cy) + std::abs(r - best_r);
    cx = best_cx;
    cy = best_cy;
    r = best_r;
    obj = best_obj;
    if (moved < 1e-10) break;
  }

  CircleFit fit;
  fit.cx = cx + s.mx;
  fit.cy = cy + s.my;
  fit.radius = std::max(r, 1e-12);
  fit.rms_residual = std::sqrt(obj / static_cast<double>(n));
  fit.inlier_count = n;
  return fit;
}

}  // namespace

CircleFit least_squares_circle(const std::vector<double>& xs,
                               const std::vector<double>& ys) {
  PlanarStats s = planar_spread(xs, ys);
  require_circle_posed(xs, ys, s);
  return fit_circle_posed(xs, ys, s);
}

CircleFit hough_circle(const std::vector<double>& xs,
                       const std::vector<double>& ys, const HoughParams& params,
                       HoughDiagnostics* diag) {
  if (!(params.r_min < params.r_max) || !(params.r_min > 0.0) ||
      !(params.center_step > 0.0) || !(params.radius_step > 0.0)) {
    throw Error("bad hough parameters");
  }
  PlanarStats spread = planar_spread(xs, ys);
  require_circle_posed(xs, ys, spread);

  const std::size_t n = xs.size();
  double min_x, max_x, min_y, max_y;
  kernels::minmax_xy(n, xs.data(), ys.data(), min_x, max_x, min_y, max_y);

  const double gx0 = min_x - params.r_max;
  const double gy0 = min_y - params.r_max;
  const double span_x = (max_x - min_x) + 2.0 * params.r_max;
  const double span_y = (max_y - min_y) + 2.0 * params.r_max;
  const std::size_t nx =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span_x / params.center_step)));
  const std::size_t ny =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span_y / params.center_step)));
  const std::size_t nr = static_cast<std::size_t>(std::floor(
                             (params.r_max - params.r_min) / params.radius_step)) +
                         1;

  std::vector<double> center_xs(nx);
  for (std::size_t i = 0; i < nx; ++i) {
    center_xs[i] = gx0 + (static_cast<double>(i) + 0.5) * params.center_step;
  }

  std::vector<std::uint32_t> votes(nx * ny * nr, 0);
  std::vector<double> row(nx);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t iy = 0; iy < ny; ++iy) {
      double cy = gy0 + (static_cast<double>(iy) + 0.5) * params.center_step;
      kernels::radial_distances_row(nx, center_xs.data(), cy, xs[p], ys[p], row.data());
      std::uint32_t* cell = votes.data() + iy * nx * nr;
      for (std::size_t ix = 0; ix < nx; ++ix, cell += nr) {
        double b = std::floor((row[ix] - params.r_min) / params.radius_step);
        if (b < 0.0 || b >= static_cast<double>(nr)) continue;
        ++cell[static_cast<std::size_t>(b)];
      }
    }
  }

  // Peak with ties resolved toward the lowest radius, then cy, then cx:
  // scanning in that order with a strict comparison does exactly that. The
  // per-radius best cell is kept as well to measure how sharply the data
  // pin down the radius.
  std::uint32_t best_votes = 0;
  std::size_t best_b = 0, best_iy = 0, best_ix = 0;
  std::vector<std::uint32_t> best_per_radius(nr, 0);
  for (std::size_t b = 0; b < nr; ++b) {
    for (std::size_t iy = 0; iy < ny; ++iy) {
      for (std::size_t ix = 0; ix < nx; ++ix) {
        std::uint32_t v = votes[(iy * nx + ix) * nr + b];
        best_per_radius[b] = std::max(best_per_radius[b], v);
        if (v > best_votes) {
          best_votes = v;
          best_b = b;
          best_iy = iy;
          best_ix = ix;
        }
      }
    }
  }

  const double raw_cx = center_xs[best_ix];
  const double raw_cy = gy0 + (static_cast<double>(best_iy) + 0.5) * params.center_step;
  const double raw_r =
      params.r_min + (static_cast<double>(best_b) + 0.5) * params.radius_step;

  std::vector<double> in_x, in_y;
  std::vector<double> dist(n);
  kernels::radial_distances(n, xs.data(), ys.data(), raw_cx, raw_cy, dist.data());
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(dist[i] - raw_r) <= 2.0 * params.radius_step) {
      in_x.push_back(xs[i]);
      in_y.push_back(ys[i]);
    }
  }
  if (in_x.empty()) {
    in_x = xs;
    in_y = ys;
  }

  double raw_obj = circle_objective(in_x, in_y, raw_cx, raw_cy, raw_r);
  CircleFit fit;
  fit.cx = raw_cx;
  fit.cy = raw_cy;
  fit.radius = raw_r;
  fit.rms_residual = std::sqrt(raw_obj / static_cast<double>(in_x.size()));
  fit.inlier_count = in_x.size();
  if (diag != nullptr) {
    diag->voted = fit;
    diag->peak_votes = best_votes;
    const std::uint32_t near_peak =
        static_cast<std::uint32_t>(std::ceil(0.8 * static_cast<double>(best_votes)));
    diag->radius_support_bins = 0;
    for (std::size_t b = 0; b < nr; ++b) {
      if (best_per_radius[b] >= near_peak) ++diag->radius_support_bins;
    }
  }
  try {
    CircleFit refined = least_squares_circle(in_x, in_y);
    double refined_obj =
        circle_objective(in_x, in_y, refined.cx, refined.cy, refined.radius);
    if (refined_obj <= raw_obj) {
      refined.inlier_count = in_x.size();
      return refined;
    }
  } catch (const DegenerateCluster&) {
    // Inlier arc too thin to refine; the voted parameters stand.
  }
  return fit;
}

double arc_coverage_deg(const std::vector<double>& xs,
                        const std::vector<double>& ys, double cx, double cy) {
  if (xs.empty()) return 0.0;
  std::vector<double> angles;
  angles.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    angles.push_back(std::atan2(ys[i] - cy, xs[i] - cx));
  }
  std::sort(angles.begin(), angles.end());
  constexpr double tau = 2.0 * std::numbers::pi;
  double max_gap = tau - (angles.back() - angles.front());
  for (std::size_t i = 1; i < angles.size(); ++i) {
    max_gap = std::max(max_gap, angles[i] - angles[i - 1]);
  }
  return (tau - max_gap) * 180.0 / std::numbers::pi;
}

CylinderFit fit_cylinder(const PointCloud& stem) {
  const std::size_t n = stem.size();
  if (n < 10) throw DegenerateGeometry("cylinder fit needs at least 10 points");
  Soa3 soa = to_soa(stem);
  double zmin = soa.z[0], zmax = soa.z[0];
  for (double z : soa.z) {
    zmin = std::min(zmin, z);
    zmax = std::max(zmax, z);
  }
  if (zmax - zmin < 0.5) {
    throw DegenerateGeometry("cylinder fit needs at least 0.5 m of vertical extent");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(soa.x[i]) || !std::isfinite(soa.y[i]) || !std::isfinite(soa.z[i])) {
      throw DegenerateGeometry("non-finite point in cylinder fit");
    }
  }

  const double z_ref = kernels::sum(n, soa.z.data()) / static_cast<double>(n);

  // Initial axis: vertical through the xy circle fit (or centroid when the
  // xy projection cannot seed a circle).
  double x0, y0, r;
  try {
    CircleFit seed = least_squares_circle(soa.x, soa.y);
    x0 = seed.cx;
    y0 = seed.cy;
    r = seed.radius;
  } catch (const DegenerateCluster&) {
    x0 = kernels::sum(n, soa.x.data()) / static_cast<double>(n);
    y0 = kernels::sum(n, soa.y.data()) / static_cast<double>(n);
    std::vector<double> d(n);
    kernels::radial_distances(n, soa.x.data(), soa.y.data(), x0, y0, d.data());
    r = kernels::sum(n, d.data()) / static_cast<double>(n);
    if (r <= 1e-12) throw DegenerateGeometry("points coincide with the axis seed");
  }
  double a = 0.0, b = 0.0;

  auto objective = [&](double px, double py, double pa, double pb, double pr) {
    double norm = std::sqrt(pa * pa + pb * pb + 1.0);
    Vec3 d(pa / norm, pb / norm, 1.0 / norm);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      Vec3 q(soa.x[i] - px, soa.y[i] - py, soa.z[i] - z_ref);
      double along = q.dot(d);
      double dist = std::sqrt(std::max(0.0, q.squaredNorm() - along * along));
      double res = dist - pr;
      total += res * res;
    }
    return total;
  };

  double obj = objective(x0, y0, a, b, r);
  using Vec5 = Eigen::Matrix<double, 5, 1>;
  using Mat5 = Eigen::Matrix<double, 5, 5>;
  for (int iter = 0; iter < 50; ++iter) {
    double norm = std::sqrt(a * a + b * b + 1.0);
    Vec3 d(a / norm, b / norm, 1.0 / norm);
    Vec3 dd_da = (Vec3::UnitX() - d * (a / norm)) / norm;
    Vec3 dd_db = (Vec3::UnitY() - d * (b / norm)) / norm;

    Mat5 jtj = Mat5::Zero();
    Vec5 jtr = Vec5::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      Vec3 q(soa.x[i] - x0, soa.y[i] - y0, soa.z[i] - z_ref);
      double along = q.dot(d);
      Vec3 u = q - along * d;  // rejection from the axis
      double dist = std::sqrt(std::max(0.0, q.squaredNorm() - along * along));
      double safe = std::max(dist, 1e-12);
      double res = dist - r;
      Vec5 j;
      j(0) = -u.x() / safe;
      j(1) = -u.y() / safe;
      j(2) = -along * q.dot(dd_da) / safe;
      j(3) = -along * q.dot(dd_db) / safe;
      j(4) = -1.0;
      jtj += j * j.transpose();
      jtr += j * res;
    }
    Vec5 step = jtj.ldlt().solve(-jtr);
    if (!step.allFinite()) throw DegenerateGeometry("cylinder normal equations unsolvable");

    double t = 1.0;
    bool improved = false;
    double nx0 = x0, ny0 = y0, na = a, nb = b, nr = r, nobj = obj;
    for (int bt = 0; bt < 20; ++bt) {
      double tx0 = x0 + t * step(0);
      double ty0 = y0 + t * step(1);
      double ta = a + t * step(2);
      double tb = b + t * step(3);
      double tr = r + t * step(4);
      double o = objective(tx0, ty0, ta, tb, tr);
      if (o < obj) {
        nx0 = tx0;
        ny0 = ty0;
        na = ta;
        nb = tb;
        nr = tr;
        nobj = o;
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) break;
    double moved = std::abs(nx0 - x0) + std::abs(ny0 - y0) + std::abs(na - a) +
                   std::abs(nb - b) + std::abs(nr - r);
    x0 = nx0;
    y0 = ny0;
    a = na;
    b = nb;
    r = nr;
    obj = nobj;
    if (moved < 1e-10) break;
  }

  if (!(r > 0.0) || !std::isfinite(obj)) {
    throw DegenerateGeometry("cylinder fit did not converge to a valid radius");
  }

  CylinderFit fit;
  double norm = std::sqrt(a * a + b * b + 1.0);
  fit.axis_point = Vec3(x0, y0, z_ref);
  fit.axis_direction = Vec3(a / norm, b / norm, 1.0 / norm);
  fit.radius = r;
  fit.rms_residual = std::sqrt(obj / static_cast<double>(n));
  return fit;
}

std::vector<CircleFit> non_maxima_suppression(std::vector<CircleFit> candidates,
                                              double radius) {
  if (!(radius > 0.0)) throw Error("nms radius must be positive");
  std::sort(candidates.begin(), candidates.end(),
            [](const CircleFit& a, const CircleFit& b) {
              if (a.inlier_count != b.inlier_count) return a.inlier_count > b.inlier_count;
              if (a.rms_residual != b.rms_residual) return a.rms_residual < b.rms_residual;
              if (a.cx != b.cx) return a.cx < b.cx;
              return a.cy < b.cy;
            });
  std::vector<CircleFit> kept;
  for (const CircleFit& c : candidates) {
    bool clear = true;
    for (const CircleFit& k : kept) {
      double dx = c.cx - k.cx;
      double dy = c.cy - k.cy;
      if (std::sqrt(dx * dx + dy * dy) <= radius) {
        clear = false;
        break;
      }
    }
    if (clear) kept.push_back(c);
  }
  return kept;
}

}  // namespace forest
