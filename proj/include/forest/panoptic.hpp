#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "forest/geometry.hpp"
#include "forest/point_cloud.hpp"

namespace forest {

/// One side of a prediction/ground-truth pair. Every point must carry a
/// semantic label; instance ids may appear only on stem or canopy points.
struct PanopticFrame {
  PointCloud points;
};

/// Throws Error if a point lacks a semantic label or a non-tree point
/// carries an instance id. Tree points without an instance are allowed and
/// count as unsegmented.
void validate_frame(const PanopticFrame& frame);

/// |a ∩ b| / |a ∪ b| over point index sets. Order inside the inputs does
/// not matter. Throws BothEmpty when both sets are empty.
double iou(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

struct MatchPair {
  std::uint32_t pred_id = 0;
  std::uint32_t gt_id = 0;
  double iou = 0.0;
};

/// Instance correspondence for the tree class. IoU > 0.5 guarantees each id
/// appears in at most one pair, so no assignment search is needed.
struct Matching {
  std::vector<MatchPair> pairs;   // ascending pred_id
  std::vector<std::uint32_t> fp;  // unmatched prediction ids, ascending
  std::vector<std::uint32_t> fn;  // unmatched ground-truth ids, ascending
};

/// Matches predicted tree instances against ground-truth tree instances.
/// Both frames must label the same points in the same order.
Matching match_instances(const PanopticFrame& pred, const PanopticFrame& gt);

enum class PqClass { Ground, Shrub, Tree };

/// A per-class quality value. `degenerate` marks the vacuous case where the
/// class is absent from both frames and the value 1.0 was assigned by
/// convention rather than measured.
struct PqValue {
  double value = 0.0;
  bool degenerate = false;
};

/// Panoptic quality for one class. Tree is scored as a thing class
/// (matched IoU sum over |TP| + |FP|/2 + |FN|/2); Ground and Shrub are
/// stuff classes scored by plain semantic IoU. A class absent from both
/// frames yields {1.0, degenerate}; absent from exactly one side yields 0.
PqValue pq_class(const PanopticFrame& pred, const PanopticFrame& gt, PqClass cls);

struct PQReport {
  PqValue ground;
  PqValue shrub;
  PqValue tree;
  double overall_pq = 0.0;  // mean of ground, shrub, tree
  // Stem and canopy overlap the tree class, so they are reported as plain
  // semantic IoU columns and stay out of the overall mean.
  PqValue stem_iou;
  PqValue canopy_iou;
  std::size_t tree_tp = 0;
  std::size_t tree_fp = 0;
  std::size_t tree_fn = 0;
};

/// Full evaluation of one prediction frame against ground truth.
PQReport pq_overall(const PanopticFrame& pred, const PanopticFrame& gt);

/// Shifts each point by its offset vector and groups the shifted positions
/// with 3D density clustering. Returns one instance id per point: cluster
/// index + 1, or 0 for noise. `offsets` must have one entry per point.
std::vector<std::uint32_t> cluster_offsets(const PointCloud& cloud,
                                           const std::vector<Vec3>& offsets,
                                           double eps, int min_pts);

/// Writes the report as `metric,fraction,percent,flag` rows.
void write_pq_report_csv(const PQReport& report, const std::string& path);

/// Renders the report as a fixed-width text table with values in percent.
std::string render_pq_table(const PQReport& report);

}  // namespace forest
