#include "forest/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <unordered_map>

#include "forest/error.hpp"

namespace forest {

namespace {

constexpr int kPlacementRetries = 10000;

/// Uniform and normal draws built directly on the mt19937_64 bit stream.
/// The standard distributions are implementation-defined, which would break
/// the bit-identical-output contract across toolchains.
struct Rng {
  std::mt19937_64 engine;

  explicit Rng(std::uint64_t seed) : engine(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(engine() >> 11) * 0x1p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    // Box-Muller; the +1 keeps the log argument strictly positive.
    const double u1 = (static_cast<double>(engine() >> 11) + 1.0) * 0x1p-53;
    const double u2 = static_cast<double>(engine() >> 11) * 0x1p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }
};

struct Placement {
  double x = 0.0;
  double y = 0.0;
  double radius_m = 0.0;
  double arc_center_rad = 0.0;
  bool arc_limited = false;
};

}  // namespace

double synth_ground_height(const SynthConfig& config, double x, double y) {
  return config.ground_amplitude_m * std::sin(x / config.ground_wavelength_m) *
         std::cos(y / config.ground_wavelength_m);
}

void validate_synth(const SynthConfig& config) {
  if (config.n_trees < 0) throw ConfigError("n_trees must be non-negative");
  if (!(config.area_w_m > 0.0) || !(config.area_h_m > 0.0)) {
    throw ConfigError("area dimensions must be positive");
  }
  if (!(config.dbh_min_cm > 5.0) || !(config.dbh_max_cm < 200.0) ||
      !(config.dbh_min_cm <= config.dbh_max_cm)) {
    throw ConfigError("dbh range must lie within (5, 200) cm");
  }
  if (!(config.min_spacing_m > config.dbh_max_cm / 100.0)) {
    throw ConfigError("min_spacing must exceed two maximum trunk radii");
  }
  if (!(config.trunk_noise_sigma_m >= 0.0)) {
    throw ConfigError("trunk_noise_sigma must be non-negative");
  }
  if (config.points_per_tree < 0) {
    throw ConfigError("points_per_tree must be non-negative");
  }
  if (!(config.ground_density >= 0.0) || !(config.shrub_density >= 0.0)) {
    throw ConfigError("point densities must be non-negative");
  }
  if (!(config.ground_wavelength_m > 0.0)) {
    throw ConfigError("ground_wavelength must be positive");
  }
  if (!(config.ground_amplitude_m >= 0.0)) {
    throw ConfigError("ground_amplitude must be non-negative");
  }
  if (!(config.trunk_height_m > 0.0)) {
    throw ConfigError("trunk_height must be positive");
  }
  if (!(config.edge_margin_m >= 0.0)) {
    throw ConfigError("edge_margin must be non-negative");
  }
  if (!(config.arc_fraction >= 0.0 && config.arc_fraction <= 1.0)) {
    throw ConfigError("arc_fraction must be in [0, 1]");
  }
  if (!(config.arc_deg > 0.0 && config.arc_deg <= 360.0)) {
    throw ConfigError("arc_deg must be in (0, 360]");
  }
}

SynthResult synth_forest(const SynthConfig& config) {
  validate_synth(config);
  constexpr double tau = 2.0 * std::numbers::pi;
  Rng rng(config.seed);

  const double x_lo = config.edge_margin_m;
  const double x_hi = config.area_w_m - config.edge_margin_m;
  const double y_lo = config.edge_margin_m;
  const double y_hi = config.area_h_m - config.edge_margin_m;
  if (config.n_trees > 0 && (x_lo >= x_hi || y_lo >= y_hi)) {
    throw PlacementFailure("edge margin leaves no room for trees");
  }

  SynthResult out;
  out.cloud.frame_id = config.plot_id;
  out.truth.ground_amplitude_m = config.ground_amplitude_m;
  out.truth.ground_wavelength_m = config.ground_wavelength_m;
  out.truth.plot_id = config.plot_id;

  // Trees first: id order is placement order, ids start at 1 because
  // instance 0 means "none" in the file formats.
  const int arc_trees =
      static_cast<int>(std::floor(config.arc_fraction * config.n_trees));
  std::vector<Placement> placements;
  for (int t = 0; t < config.n_trees; ++t) {
    Placement p;
    const double dbh_cm = rng.uniform(config.dbh_min_cm, config.dbh_max_cm);
    p.radius_m = dbh_cm / 200.0;
    p.arc_limited = t < arc_trees;
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementRetries; ++attempt) {
      p.x = rng.uniform(x_lo, x_hi);
      p.y = rng.uniform(y_lo, y_hi);
      bool clear = true;
      for (const Placement& other : placements) {
        if (std::hypot(p.x - other.x, p.y - other.y) < config.min_spacing_m) {
          clear = false;
          break;
        }
      }
      if (clear) {
        placed = true;
        break;
      }
    }
    if (!placed) {
      throw PlacementFailure("could not place tree " + std::to_string(t + 1) +
                             " after " + std::to_string(kPlacementRetries) +
                             " attempts");
    }
    p.arc_center_rad = rng.uniform(0.0, tau);
    placements.push_back(p);
    out.truth.trees.push_back({static_cast<std::uint32_t>(t + 1), p.x, p.y,
                               dbh_cm});
  }

  const double area = config.area_w_m * config.area_h_m;
  auto push = [&out](double x, double y, double z, SemanticLabel label,
                     std::uint32_t instance) {
    Point3 point;
    point.x = x;
    point.y = y;
    point.z = z;
    point.semantic = label;
    if (instance != kNoInstance) point.instance = instance;
    out.cloud.points.push_back(point);
  };

  // Ground points sit exactly on the analytic surface so terrain tests can
  // compare against the closed form.
  const long long n_ground = std::llround(config.ground_density * area);
  for (long long i = 0; i < n_ground; ++i) {
    const double x = rng.uniform(0.0, config.area_w_m);
    const double y = rng.uniform(0.0, config.area_h_m);
    push(x, y, synth_ground_height(config, x, y), SemanticLabel::Ground,
         kNoInstance);
  }

  const long long n_shrub = std::llround(config.shrub_density * area);
  for (long long i = 0; i < n_shrub; ++i) {
    const double x = rng.uniform(0.0, config.area_w_m);
    const double y = rng.uniform(0.0, config.area_h_m);
    const double z = synth_ground_height(config, x, y) + rng.uniform(0.1, 1.0);
    push(x, y, z, SemanticLabel::Shrub, kNoInstance);
  }

  const double arc_rad = config.arc_deg * std::numbers::pi / 180.0;
  for (int t = 0; t < config.n_trees; ++t) {
    const Placement& p = placements[t];
    const std::uint32_t instance = static_cast<std::uint32_t>(t + 1);
    const double base = synth_ground_height(config, p.x, p.y);
    for (int i = 0; i < config.points_per_tree; ++i) {
      const double theta = p.arc_limited
                               ? rng.uniform(p.arc_center_rad,
                                             p.arc_center_rad + arc_rad)
                               : rng.uniform(0.0, tau);
      const double z = base + rng.uniform(0.0, config.trunk_height_m);
      const double r = p.radius_m + rng.normal() * config.trunk_noise_sigma_m;
      push(p.x + r * std::cos(theta), p.y + r * std::sin(theta), z,
           SemanticLabel::Stem, instance);
    }
    if (config.canopy) {
      // Ellipsoidal blob above the trunk; direction from a normalized
      // Gaussian triple and radius from a cube root keep the ball uniform
      // with a fixed draw count per point.
      const double rx = 1.5;
      const double rz = 2.0;
      const double cz = base + config.trunk_height_m + rz;
      const int n_canopy = config.points_per_tree / 2;
      for (int i = 0; i < n_canopy; ++i) {
        double ux = rng.normal();
        double uy = rng.normal();
        double uz = rng.normal();
        const double norm = std::sqrt(ux * ux + uy * uy + uz * uz);
        if (norm > 0.0) {
          ux /= norm;
          uy /= norm;
          uz /= norm;
        }
        const double scale = std::cbrt(rng.uniform());
        push(p.x + rx * ux * scale, p.y + rx * uy * scale,
             cz + rz * uz * scale, SemanticLabel::Canopy, instance);
      }
    }
  }

  // Offsets point at the centroid of each instance's emitted points, so
  // shifting by them collapses an instance onto a single location.
  out.truth.offsets.assign(out.cloud.size(), Vec3::Zero());
  std::unordered_map<std::uint32_t, Vec3> centroid_sum;
  std::unordered_map<std::uint32_t, std::size_t> centroid_count;
  for (const Point3& point : out.cloud.points) {
    if (!point.instance) continue;
    centroid_sum.try_emplace(*point.instance, Vec3::Zero()).first->second +=
        Vec3(point.x, point.y, point.z);
    ++centroid_count[*point.instance];
  }
  for (std::size_t i = 0; i < out.cloud.points.size(); ++i) {
    const Point3& point = out.cloud.points[i];
    if (!point.instance) continue;
    const Vec3 centroid = centroid_sum[*point.instance] /
                          static_cast<double>(centroid_count[*point.instance]);
    out.truth.offsets[i] = centroid - Vec3(point.x, point.y, point.z);
  }
  return out;
}

}  // namespace forest
