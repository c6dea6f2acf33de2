#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "forest/geometry.hpp"
#include "forest/point_cloud.hpp"

namespace forest {

/// Parameters of the synthetic forest generator. The generator is the
/// ground-truth oracle for the pipeline tests, so everything it emits is
/// exactly reproducible from the seed.
struct SynthConfig {
  std::uint64_t seed = 1;
  int n_trees = 50;
  double area_w_m = 100.0;
  double area_h_m = 100.0;
  double dbh_min_cm = 10.0;
  double dbh_max_cm = 80.0;
  double min_spacing_m = 2.0;      // must exceed two max trunk radii
  double ground_amplitude_m = 0.5; // h(x,y) = A sin(x/L) cos(y/L)
  double ground_wavelength_m = 10.0;
  double trunk_noise_sigma_m = 0.01;
  int points_per_tree = 4000;
  double shrub_density = 0.0;   // points per m^2
  bool canopy = false;
  double ground_density = 20.0; // points per m^2
  double trunk_height_m = 4.0;
  double edge_margin_m = 2.0;   // keep-out band along the area border
  double arc_fraction = 0.0;    // share of trees seen over a limited arc
  double arc_deg = 360.0;
  std::string plot_id = "plot";
};

struct SynthTree {
  std::uint32_t id = 0;  // equals the instance id in the cloud
  double x = 0.0;
  double y = 0.0;
  double dbh_cm = 0.0;
};

struct SynthTruth {
  std::vector<SynthTree> trees;
  // One vector per cloud point, pointing at the centroid of the point's
  // tree instance; zero for non-tree points.
  std::vector<Vec3> offsets;
  double ground_amplitude_m = 0.0;
  double ground_wavelength_m = 0.0;
  std::string plot_id;
};

struct SynthResult {
  PointCloud cloud;
  SynthTruth truth;
};

/// Analytic terrain surface used by the generator.
double synth_ground_height(const SynthConfig& config, double x, double y);

/// Throws ConfigError when a field breaks the generator invariants.
void validate_synth(const SynthConfig& config);

/// Generates a labeled forest cloud plus its truth table. Deterministic:
/// the same config yields bit-identical output. Throws PlacementFailure
/// when a tree cannot be placed at min_spacing within bounded retries.
SynthResult synth_forest(const SynthConfig& config);

}  // namespace forest
