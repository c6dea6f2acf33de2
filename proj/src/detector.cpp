#include "forest/detector.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>

#include "forest/dbscan.hpp"
#include "forest/error.hpp"
#include "forest/geometry.hpp"
#include "forest/kernels.hpp"

namespace forest {
namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Work is split in
// fixed contiguous chunks and results go to caller-indexed slots, so the
// outcome cannot depend on scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max<std::size_t>(1, hw);
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct Candidate {
  bool valid = false;
  CircleFit fit;
  double ground_x = 0.0;
  double ground_y = 0.0;
};

Candidate fit_cluster_circle(const PointCloud& slice, const Cluster& cluster,
                             const PipelineConfig& cfg) {
  Candidate out;
  if (cluster.point_indices.size() < static_cast<std::size_t>(cfg.fit_min_trunk_points)) {
    return out;
  }
  std::vector<double> xs, ys;
  xs.reserve(cluster.point_indices.size());
  ys.reserve(cluster.point_indices.size());
  for (std::size_t i : cluster.point_indices) {
    xs.push_back(slice.points[i].x);
    ys.push_back(slice.points[i].y);
  }
  HoughParams hp;
  hp.r_min = cfg.hough_r_min_m;
  hp.r_max = cfg.hough_r_max_m;
  hp.center_step = cfg.hough_center_step_m;
  hp.radius_step = cfg.hough_radius_step_m;
  CircleFit fit;
  HoughDiagnostics diag;
  try {
    fit = hough_circle(xs, ys, hp, &diag);
  } catch (const DegenerateCluster&) {
    return out;
  }
  const CircleFit& voted = diag.voted;
  if (fit.inlier_count < static_cast<std::size_t>(cfg.fit_min_trunk_points)) return out;
  if (!(fit.radius > cfg.hough_r_min_m && fit.radius < cfg.hough_r_max_m)) return out;
  if (fit.rms_residual > cfg.fit_residual_max_m) return out;

  // Occluded trunks seen over too small an arc leave the radius
  // ill-conditioned. A short arc can fool either center estimate on its own:
  // least squares may pull the center into the points, and the vote may lock
  // onto a smaller osculating circle; from a pulled-in center the same arc
  // looks deceptively wide. Three symptoms are gated. First, an unpinned
  // radius: a whole family of osculating circles explains a short arc, so
  // near-peak vote support smears across many radius bins (measured: 60
  // degree arcs spread over 90+ bins, genuine rings stay within a dozen).
  // Second, disagreement between the voted and refined radii. Third, low
  // angular coverage about either geometry.
  if (diag.radius_support_bins > 24) return out;
  if (std::abs(fit.radius - voted.radius) > 3.0 * hp.radius_step) return out;
  auto coverage_about = [&](const CircleFit& circle) {
    std::vector<double> in_x, in_y;
    std::vector<double> dist(xs.size());
    kernels::radial_distances(xs.size(), xs.data(), ys.data(), circle.cx,
                              circle.cy, dist.data());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (std::abs(dist[i] - circle.radius) <= 2.0 * hp.radius_step) {
        in_x.push_back(xs[i]);
        in_y.push_back(ys[i]);
      }
    }
    return arc_coverage_deg(in_x, in_y, circle.cx, circle.cy);
  };
  if (coverage_about(fit) < cfg.fit_min_arc_deg) return out;
  if (coverage_about(voted) < cfg.fit_min_arc_deg) return out;

  out.valid = true;
  out.fit = fit;
  out.ground_x = fit.cx;
  out.ground_y = fit.cy;
  return out;
}

Candidate fit_cluster_cylinder(const PointCloud& slice, const Cluster& cluster,
                               const PipelineConfig& cfg) {
  Candidate out;
  if (cluster.point_indices.size() < static_cast<std::size_t>(cfg.fit_min_trunk_points)) {
    return out;
  }
  PointCloud stem;
  stem.points.reserve(cluster.point_indices.size());
  for (std::size_t i : cluster.point_indices) stem.points.push_back(slice.points[i]);

  CylinderFit cyl;
  try {
    cyl = fit_cylinder(stem);
  } catch (const DegenerateGeometry&) {
    return out;
  } catch (const DegenerateCluster&) {
    return out;
  }
  if (!(cyl.radius > cfg.hough_r_min_m && cyl.radius < cfg.hough_r_max_m)) return out;
  if (cyl.rms_residual > cfg.cyl_residual_max_m) return out;

  // Intersect the axis with the ground plane z'=0 for the map position.
  double t = -cyl.axis_point.z() / cyl.axis_direction.z();
  out.valid = true;
  out.ground_x = cyl.axis_point.x() + t * cyl.axis_direction.x();
  out.ground_y = cyl.axis_point.y() + t * cyl.axis_direction.y();
  out.fit.cx = out.ground_x;
  out.fit.cy = out.ground_y;
  out.fit.radius = cyl.radius;
  out.fit.rms_residual = cyl.rms_residual;
  out.fit.inlier_count = cluster.point_indices.size();
  return out;
}

}  // namespace

SliceResult slice_breast_height(const PointCloud& normalized, double low_m,
                                double high_m) {
  if (!(low_m < high_m)) throw Error("slice band must satisfy low < high");
  SliceResult result;
  result.cloud.frame_id = normalized.frame_id;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    double z = normalized.points[i].z;
    if (z >= low_m && z <= high_m) {
      result.cloud.points.push_back(normalized.points[i]);
      result.indices.push_back(i);
    }
  }
  return result;
}

DetectResult detect_trees(const PayloadCloud& payload, const PipelineConfig& config,
                          int payload_id) {
  validate_config(config);
  PointCloud world = apply_pose(payload.cloud, payload.pose);

  ClothResult cloth = cloth_filter(world, config.cloth);
  Dtm dtm = build_dtm(world, cloth.ground_mask, config.dtm_resolution_m,
                      config.dtm_fill_radius_m);
  NormalizeResult normalized = normalize_heights(world, dtm);

  const bool cylinder = config.method == FitMethod::Cylinder;
  SliceResult slice = cylinder
                          ? slice_breast_height(normalized.cloud, config.stem_low_m,
                                                config.stem_high_m)
                          : slice_breast_height(normalized.cloud, config.slice_low_m,
                                                config.slice_high_m);

  DetectResult result;
  result.dtm = std::move(dtm);
  result.excluded_points = normalized.excluded;
  result.cloth_converged = cloth.converged;

  if (!slice.cloud.empty()) {
    DbscanResult clusters =
        dbscan_xy(slice.cloud, config.dbscan_eps_m, config.dbscan_min_pts);
    std::vector<Candidate> candidates(clusters.clusters.size());
    parallel_for(clusters.clusters.size(), config.runtime_threads, [&](std::size_t k) {
      candidates[k] = cylinder
                          ? fit_cluster_cylinder(slice.cloud, clusters.clusters[k], config)
                          : fit_cluster_circle(slice.cloud, clusters.clusters[k], config);
    });

    std::vector<Candidate> accepted;
    for (const Candidate& c : candidates) {
      if (c.valid) accepted.push_back(c);
    }
    std::sort(accepted.begin(), accepted.end(), [](const Candidate& a, const Candidate& b) {
      if (a.ground_x != b.ground_x) return a.ground_x < b.ground_x;
      return a.ground_y < b.ground_y;
    });

    std::vector<CircleFit> fits;
    fits.reserve(accepted.size());
    for (const Candidate& c : accepted) fits.push_back(c.fit);
    std::vector<CircleFit> kept = non_maxima_suppression(std::move(fits), config.nms_radius_m);

    for (const CircleFit& fit : kept) {
      // Recover the candidate that owns this fit; centers are unique after
      // suppression so (cx, cy) identifies it.
      const Candidate* owner = nullptr;
      for (const Candidate& c : accepted) {
        if (c.fit.cx == fit.cx && c.fit.cy == fit.cy && c.fit.radius == fit.radius) {
          owner = &c;
          break;
        }
      }
      TreeDetection det;
      det.x = owner ? owner->ground_x : fit.cx;
      det.y = owner ? owner->ground_y : fit.cy;
      det.dbh_cm = 200.0 * fit.radius;
      det.fit = fit;
      det.payload_id = payload_id;
      det.support = fit.inlier_count;
      result.detections.push_back(det);
    }
  }
  return result;
}

}  // namespace forest
