#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace forest {

/// Semantic classes with their fixed on-disk integer codes.
enum class SemanticLabel : std::uint8_t {
  Ground = 0,
  Shrub = 1,
  Stem = 2,
  Canopy = 3,
};

/// Stem and Canopy together form the derived "tree" class. Membership is
/// always computed, never stored.
inline bool is_tree(SemanticLabel label) {
  return label == SemanticLabel::Stem || label == SemanticLabel::Canopy;
}

inline const char* label_name(SemanticLabel label) {
  switch (label) {
    case SemanticLabel::Ground: return "ground";
    case SemanticLabel::Shrub: return "shrub";
    case SemanticLabel::Stem: return "stem";
    case SemanticLabel::Canopy: return "canopy";
  }
  return "?";
}

/// Instance id 0 is reserved for "no instance" in every file format.
constexpr std::uint32_t kNoInstance = 0;

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  std::optional<double> intensity;
  std::optional<SemanticLabel> semantic;
  std::optional<std::uint32_t> instance;
};

struct PointCloud {
  std::vector<Point3> points;
  std::string frame_id;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Which optional channels are present anywhere in a cloud.
struct Channels {
  bool intensity = false;
  bool semantic = false;
  bool instance = false;
};

Channels cloud_channels(const PointCloud& cloud);

/// Throws NonFiniteCoordinate (with point index) or Error if the cloud breaks
/// an invariant: finite coordinates, instances only on stem/canopy points.
void validate_cloud(const PointCloud& cloud);

/// SoA views used by the kernel layer.
struct Soa3 {
  std::vector<double> x, y, z;
  std::size_t size() const { return x.size(); }
};

Soa3 to_soa(const PointCloud& cloud);
void from_soa(const Soa3& soa, PointCloud& cloud);

SemanticLabel label_from_code(int code);  // throws UnknownLabelCode

}  // namespace forest
