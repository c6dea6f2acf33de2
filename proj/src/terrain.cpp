#include "forest/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include "forest/error.hpp"
#include "forest/kernels.hpp"

namespace forest {
namespace {

constexpr double kNoData = std::numeric_limits<double>::quiet_NaN();

// Cell index along one axis. A coordinate exactly on a shared cell edge
// belongs to the lower-index cell; results are clamped into the grid.
std::size_t bin_index(double coord, double origin, double res, std::size_t n) {
  double u = (coord - origin) / res;
  double fl = std::floor(u);
  long long i = static_cast<long long>(fl);
  if (u == fl && u > 0.0) --i;
  if (i < 0) i = 0;
  if (i >= static_cast<long long>(n)) i = static_cast<long long>(n) - 1;
  return static_cast<std::size_t>(i);
}

std::size_t axis_cells(double span, double res) {
  if (span <= 0.0) return 1;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / res)));
}

void validate_cloth_params(const ClothParams& p) {
  if (!(p.cell_size_m > 0.0) || !(p.gravity_step_m > 0.0) ||
      !(p.classification_threshold_m > 0.0) || !(p.convergence_epsilon_m > 0.0) ||
      p.max_iterations <= 0) {
    throw Error("cloth parameters must be positive");
  }
  if (p.rigidness < 1 || p.rigidness > 3) {
    throw Error("cloth rigidness must be 1, 2, or 3");
  }
}

}  // namespace

bool Dtm::has_data(std::size_t ix, std::size_t iy) const {
  return std::isfinite(at(ix, iy));
}

std::size_t Dtm::col_of(double x) const {
  return bin_index(x, origin_x, resolution, width);
}

std::size_t Dtm::row_of(double y) const {
  return bin_index(y, origin_y, resolution, height);
}

double Dtm::height_at(double x, double y) const {
  if (width == 0 || height == 0) return kNoData;

  auto lattice = [](double g, std::size_t n, std::size_t& i0) {
    if (n == 1) {
      i0 = 0;
      return 0.0;
    }
    double fl = std::floor(g);
    long long i = static_cast<long long>(fl);
    if (i < 0) i = 0;
    if (i > static_cast<long long>(n) - 2) i = static_cast<long long>(n) - 2;
    i0 = static_cast<std::size_t>(i);
    return std::clamp(g - static_cast<double>(i), 0.0, 1.0);
  };

  std::size_t i0, j0;
  double fx = lattice((x - origin_x) / resolution - 0.5, width, i0);
  double fy = lattice((y - origin_y) / resolution - 0.5, height, j0);
  std::size_t i1 = std::min(i0 + 1, width - 1);
  std::size_t j1 = std::min(j0 + 1, height - 1);

  double c00 = at(i0, j0);
  double c10 = at(i1, j0);
  double c01 = at(i0, j1);
  double c11 = at(i1, j1);
  if (!std::isfinite(c00) || !std::isfinite(c10) || !std::isfinite(c01) ||
      !std::isfinite(c11)) {
    double containing = at(col_of(x), row_of(y));
    if (!std::isfinite(containing)) return kNoData;
    if (!std::isfinite(c00)) c00 = containing;
    if (!std::isfinite(c10)) c10 = containing;
    if (!std::isfinite(c01)) c01 = containing;
    if (!std::isfinite(c11)) c11 = containing;
  }
  double h0 = c00 + (c10 - c00) * fx;
  double h1 = c01 + (c11 - c01) * fx;
  return h0 + (h1 - h0) * fy;
}

ClothResult cloth_filter(const PointCloud& cloud, const ClothParams& params) {
  if (cloud.empty()) throw EmptyCloud("cloth_filter: empty cloud");
  validate_cloth_params(params);

  Soa3 soa = to_soa(cloud);
  double min_x, max_x, min_y, max_y;
  kernels::minmax_xy(soa.size(), soa.x.data(), soa.y.data(), min_x, max_x,
                     min_y, max_y);

  Dtm cloth;
  cloth.origin_x = min_x;
  cloth.origin_y = min_y;
  cloth.resolution = params.cell_size_m;
  cloth.width = axis_cells(max_x - min_x, params.cell_size_m);
  cloth.height = axis_cells(max_y - min_y, params.cell_size_m);
  const std::size_t n_cells = cloth.width * cloth.height;

  // Inverted terrain: cloth falls onto z' = -z, so each cell's obstacle is
  // the negated minimum z of its points. Cells without points never pin.
  const double kFree = -std::numeric_limits<double>::infinity();
  std::vector<double> hit(n_cells, kFree);
  for (std::size_t k = 0; k < soa.size(); ++k) {
    std::size_t cell = cloth.row_of(soa.y[k]) * cloth.width + cloth.col_of(soa.x[k]);
    hit[cell] = std::max(hit[cell], -soa.z[k]);
  }
  double top = kFree;
  for (double h : hit) top = std::max(top, h);

  std::vector<double> h(n_cells, top + params.gravity_step_m);
  std::vector<double> next(n_cells);
  std::vector<char> pinned(n_cells, 0);
  std::vector<double> iter_start(n_cells);

  bool converged = false;
  const long long w = static_cast<long long>(cloth.width);
  const long long ht = static_cast<long long>(cloth.height);
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    iter_start = h;
    for (std::size_t i = 0; i < n_cells; ++i) {
      if (pinned[i]) continue;
      double nh = h[i] - params.gravity_step_m;
      if (nh <= hit[i]) {
        nh = hit[i];
        pinned[i] = 1;
      }
      h[i] = nh;
    }
    for (int pass = 0; pass < params.rigidness; ++pass) {
      // Jacobi relaxation: every node reads the previous field, so the
      // update order cannot affect the result.
      next = h;
      for (long long jy = 0; jy < ht; ++jy) {
        for (long long jx = 0; jx < w; ++jx) {
          std::size_t i = static_cast<std::size_t>(jy * w + jx);
          if (pinned[i]) continue;
          double delta = 0.0;
          int count = 0;
          if (jx > 0) { delta += h[i - 1] - h[i]; ++count; }
          if (jx + 1 < w) { delta += h[i + 1] - h[i]; ++count; }
          if (jy > 0) { delta += h[i - static_cast<std::size_t>(w)] - h[i]; ++count; }
          if (jy + 1 < ht) { delta += h[i + static_cast<std::size_t>(w)] - h[i]; ++count; }
          if (count == 0) continue;
          double nh = h[i] + 0.5 * delta / count;
          if (nh <= hit[i]) {
            nh = hit[i];
            pinned[i] = 1;
          }
          next[i] = nh;
        }
      }
      h.swap(next);
    }
    double max_disp = 0.0;
    for (std::size_t i = 0; i < n_cells; ++i) {
      max_disp = std::max(max_disp, std::abs(h[i] - iter_start[i]));
    }
    if (max_disp < params.convergence_epsilon_m) {
      converged = true;
      break;
    }
  }

  cloth.heights.resize(n_cells);
  for (std::size_t i = 0; i < n_cells; ++i) cloth.heights[i] = -h[i];

  ClothResult result;
  result.cloth = std::move(cloth);
  result.converged = converged;
  result.ground_mask.resize(cloud.size());
  for (std::size_t k = 0; k < soa.size(); ++k) {
    double surface = result.cloth.height_at(soa.x[k], soa.y[k]);
    result.ground_mask[k] =
        std::abs(soa.z[k] - surface) <= params.classification_threshold_m ? 1 : 0;
  }
  return result;
}

Dtm build_dtm(const PointCloud& cloud, const std::vector<char>& ground_mask,
              double resolution, double fill_radius_m) {
  if (!(resolution > 0.0)) throw Error("dtm resolution must be positive");
  if (ground_mask.size() != cloud.size()) {
    throw Error("ground mask length does not match cloud");
  }

  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!ground_mask[i]) continue;
    const Point3& p = cloud.points[i];
    if (!any) {
      min_x = max_x = p.x;
      min_y = max_y = p.y;
      any = true;
    } else {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
  }
  if (!any) throw NoGroundPoints("build_dtm: no ground points");

  Dtm dtm;
  dtm.origin_x = min_x;
  dtm.origin_y = min_y;
  dtm.resolution = resolution;
  dtm.width = axis_cells(max_x - min_x, resolution);
  dtm.height = axis_cells(max_y - min_y, resolution);
  dtm.heights.assign(dtm.width * dtm.height, kNoData);

  // Per-cell median without per-cell buffers: sort (cell, z) pairs once.
  std::vector<std::pair<std::uint64_t, double>> samples;
  samples.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!ground_mask[i]) continue;
    const Point3& p = cloud.points[i];
    std::uint64_t cell = static_cast<std::uint64_t>(dtm.row_of(p.y)) * dtm.width +
                         dtm.col_of(p.x);
    samples.emplace_back(cell, p.z);
  }
  std::sort(samples.begin(), samples.end());
  for (std::size_t lo = 0; lo < samples.size();) {
    std::size_t hi = lo;
    while (hi < samples.size() && samples[hi].first == samples[lo].first) ++hi;
    std::size_t n = hi - lo;
    std::size_t mid = lo + n / 2;
    double median = (n % 2 == 1)
                        ? samples[mid].second
                        : 0.5 * (samples[mid - 1].second + samples[mid].second);
    dtm.heights[samples[lo].first] = median;
    lo = hi;
  }

  // Nearest-neighbor fill: splat each covered cell into its neighborhood,
  // keeping the lexicographically smallest (distance^2, source row, source
  // col) per target so the result is independent of traversal order.
  long long radius_cells = static_cast<long long>(std::floor(fill_radius_m / resolution));
  // The packed key gives d^2 20 bits and each source index 22, so the
  // search radius is capped where 2*r^2 would no longer fit.
  radius_cells = std::min<long long>(radius_cells, 512);
  if (radius_cells > 0) {
    double max_d2_cells = (fill_radius_m / resolution) * (fill_radius_m / resolution);
    const std::uint64_t kUnset = ~0ull;
    std::vector<std::uint64_t> best(dtm.width * dtm.height, kUnset);
    std::vector<std::size_t> covered;
    for (std::size_t i = 0; i < dtm.heights.size(); ++i) {
      if (std::isfinite(dtm.heights[i])) covered.push_back(i);
    }
    const long long w = static_cast<long long>(dtm.width);
    const long long ht = static_cast<long long>(dtm.height);
    for (std::size_t src : covered) {
      long long sy = static_cast<long long>(src) / w;
      long long sx = static_cast<long long>(src) % w;
      for (long long dy = -radius_cells; dy <= radius_cells; ++dy) {
        long long ty = sy + dy;
        if (ty < 0 || ty >= ht) continue;
        for (long long dx = -radius_cells; dx <= radius_cells; ++dx) {
          long long tx = sx + dx;
          if (tx < 0 || tx >= w) continue;
          long long d2 = dx * dx + dy * dy;
          if (d2 == 0 || static_cast<double>(d2) > max_d2_cells) continue;
          std::size_t t = static_cast<std::size_t>(ty * w + tx);
          if (std::isfinite(dtm.heights[t])) continue;
          std::uint64_t key = (static_cast<std::uint64_t>(d2) << 44) |
                              (static_cast<std::uint64_t>(sy) << 22) |
                              static_cast<std::uint64_t>(sx);
          if (key < best[t]) best[t] = key;
        }
      }
    }
    for (std::size_t t = 0; t < best.size(); ++t) {
      if (best[t] == kUnset) continue;
      std::size_t sy = (best[t] >> 22) & ((1ull << 22) - 1);
      std::size_t sx = best[t] & ((1ull << 22) - 1);
      dtm.heights[t] = dtm.at(sx, sy);
    }
  }
  return dtm;
}

NormalizeResult normalize_heights(const PointCloud& cloud, const Dtm& dtm) {
  NormalizeResult result;
  result.cloud.frame_id = cloud.frame_id;
  result.cloud.points.reserve(cloud.size());
  result.kept.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    double ground = dtm.height_at(p.x, p.y);
    if (!std::isfinite(ground)) {
      ++result.excluded;
      continue;
    }
    Point3 q = p;
    q.z = p.z - ground;
    result.cloud.points.push_back(q);
    result.kept.push_back(i);
  }
  return result;
}

void write_esri_asc(const Dtm& dtm, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  char buf[64];
  out << "ncols " << dtm.width << "\n";
  out << "nrows " << dtm.height << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", dtm.origin_x);
  out << "xllcorner " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", dtm.origin_y);
  out << "yllcorner " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", dtm.resolution);
  out << "cellsize " << buf << "\n";
  out << "NODATA_value -9999\n";
  for (std::size_t row = dtm.height; row-- > 0;) {
    for (std::size_t col = 0; col < dtm.width; ++col) {
      if (col) out << ' ';
      double v = dtm.at(col, row);
      if (std::isfinite(v)) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf;
      } else {
        out << "-9999";
      }
    }
    out << "\n";
  }
  if (!out) throw IoFailure("write failed: " + path);
}

Dtm read_esri_asc(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open " + path);
  Dtm dtm;
  double nodata = -9999.0;
  std::string key;
  for (int i = 0; i < 6; ++i) {
    in >> key;
    if (key == "ncols") in >> dtm.width;
    else if (key == "nrows") in >> dtm.height;
    else if (key == "xllcorner") in >> dtm.origin_x;
    else if (key == "yllcorner") in >> dtm.origin_y;
    else if (key == "cellsize") in >> dtm.resolution;
    else if (key == "NODATA_value") in >> nodata;
    else throw MalformedHeader("unexpected asc header token: " + key);
    if (in.fail()) throw MalformedHeader("bad asc header value after " + key);
  }
  dtm.heights.assign(dtm.width * dtm.height, kNoData);
  for (std::size_t row = dtm.height; row-- > 0;) {
    for (std::size_t col = 0; col < dtm.width; ++col) {
      double v;
      in >> v;
      if (in.fail()) throw IoFailure("truncated asc grid in " + path);
      if (v != nodata) dtm.at(col, row) = v;
    }
  }
  return dtm;
}

}  // namespace forest
