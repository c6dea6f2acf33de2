#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "forest/point_cloud.hpp"

namespace forest {

/// Cloth simulation settings. The cloth is dropped onto the inverted cloud;
/// a point is ground when it lies within classification_threshold_m of the
/// settled surface.
struct ClothParams {
  double cell_size_m = 0.5;
  int rigidness = 2;  // internal-constraint passes per step, 1..3
  double gravity_step_m = 0.05;
  int max_iterations = 500;
  double classification_threshold_m = 0.1;
  double convergence_epsilon_m = 0.001;
};

/// 2.5D height grid. Cell (ix, iy) spans
///   [origin_x + ix*r, origin_x + (ix+1)*r) x [origin_y + iy*r, ...)
/// and its sample sits at the cell center. NaN marks a no-data cell.
/// A coordinate exactly on a shared edge belongs to the lower-index cell.
struct Dtm {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double resolution = 1.0;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> heights;  // row-major, index = iy * width + ix

  double& at(std::size_t ix, std::size_t iy) { return heights[iy * width + ix]; }
  double at(std::size_t ix, std::size_t iy) const { return heights[iy * width + ix]; }
  bool has_data(std::size_t ix, std::size_t iy) const;

  std::size_t col_of(double x) const;
  std::size_t row_of(double y) const;

  /// Bilinear height between cell centers; clamps outside the center
  /// lattice. A no-data corner borrows the containing cell's height; if
  /// that cell is also no-data the result is NaN.
  double height_at(double x, double y) const;
};

struct ClothResult {
  std::vector<char> ground_mask;  // 1 = ground, per input point
  Dtm cloth;                      // settled surface in world orientation
  bool converged = true;
};

ClothResult cloth_filter(const PointCloud& cloud, const ClothParams& params);

/// Rasterizes ground points into a DTM: per-cell median height, then
/// nearest-neighbor fill of empty cells out to fill_radius_m.
Dtm build_dtm(const PointCloud& cloud, const std::vector<char>& ground_mask,
              double resolution, double fill_radius_m);

struct NormalizeResult {
  PointCloud cloud;                 // z replaced by height above ground
  std::vector<std::size_t> kept;    // original index of each output point
  std::size_t excluded = 0;         // points over no-data cells
};

NormalizeResult normalize_heights(const PointCloud& cloud, const Dtm& dtm);

/// ESRI ASCII grid, readable by QGIS. Rows top-down, -9999 for no-data.
void write_esri_asc(const Dtm& dtm, const std::string& path);
Dtm read_esri_asc(const std::string& path);

}  // namespace forest
