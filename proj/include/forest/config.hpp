#pragma once

#include <cstdint>
#include <string>

#include "forest/terrain.hpp"

namespace forest {

enum class FitMethod { Circle, Cylinder };

/// Every knob of the detection pipeline, exposed as flat key=value config.
struct PipelineConfig {
  double payload_window_m = 20.0;

  ClothParams cloth;

  double dtm_resolution_m = 0.04;
  double dtm_fill_radius_m = 0.25;

  double slice_low_m = 1.25;
  double slice_high_m = 1.35;

  double dbscan_eps_m = 0.15;
  int dbscan_min_pts = 8;

  double nms_radius_m = 0.5;

  double hough_r_min_m = 0.025;
  double hough_r_max_m = 1.0;
  double hough_center_step_m = 0.02;
  double hough_radius_step_m = 0.01;

  double fit_residual_max_m = 0.03;
  int fit_min_trunk_points = 20;
  double fit_min_arc_deg = 90.0;

  // Stem band and residual gate for the cylinder alternative.
  double stem_low_m = 0.5;
  double stem_high_m = 4.0;
  double cyl_residual_max_m = 0.05;

  double assoc_radius_m = 0.5;

  FitMethod method = FitMethod::Circle;
  int runtime_threads = 0;  // 0 = all hardware threads
};

/// Parses a flat key=value file ('#' starts a comment). Unknown keys and
/// out-of-range values throw ConfigError.
PipelineConfig load_config(const std::string& path);

/// Applies one key=value assignment to an existing config.
void apply_config_line(PipelineConfig& config, const std::string& line);

/// Canonical dump: sorted key=value lines, one per key.
std::string dump_config(const PipelineConfig& config);

/// FNV-1a over the canonical dump; changes whenever any value changes.
std::uint64_t config_fingerprint(const PipelineConfig& config);

/// FNV-1a over the sorted key names; changes only when the schema changes.
std::uint64_t config_schema_hash();

void validate_config(const PipelineConfig& config);

}  // namespace forest
