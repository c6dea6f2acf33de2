#pragma once

// Brute-force reference scorer for the panoptic metrics. Written for
// clarity, not speed: every prediction/ground-truth instance pair is
// examined directly. Kept independent of the library implementation so the
// two can be compared bit for bit.

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "forest/panoptic.hpp"
#include "forest/point_cloud.hpp"

namespace pq_oracle {

struct RefPair {
  std::uint32_t pred_id = 0;
  std::uint32_t gt_id = 0;
  double iou = 0.0;
};

struct RefReport {
  double ground = 0.0;
  double shrub = 0.0;
  double tree = 0.0;
  double overall = 0.0;
  double stem = 0.0;
  double canopy = 0.0;
  bool ground_degenerate = false;
  bool shrub_degenerate = false;
  bool tree_degenerate = false;
  bool stem_degenerate = false;
  bool canopy_degenerate = false;
  std::vector<RefPair> pairs;       // ascending pred id
  std::vector<std::uint32_t> fp;    // ascending
  std::vector<std::uint32_t> fn;    // ascending
  bool unique_matching = true;      // no id ever matched twice
};

inline std::uint32_t ref_tree_id(const forest::Point3& p) {
  if (!p.semantic || !forest::is_tree(*p.semantic)) return 0;
  if (!p.instance) return 0;
  return *p.instance;
}

// Index sets per instance id, ids ascending, indices ascending.
inline std::map<std::uint32_t, std::vector<std::size_t>> ref_instances(
    const forest::PanopticFrame& frame) {
  std::map<std::uint32_t, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < frame.points.size(); ++i) {
    const std::uint32_t id = ref_tree_id(frame.points.points[i]);
    if (id != 0) out[id].push_back(i);
  }
  return out;
}

inline double ref_set_iou(const std::vector<std::size_t>& a,
                          const std::vector<std::size_t>& b) {
  std::size_t inter = 0;
  for (std::size_t va : a) {
    for (std::size_t vb : b) {
      if (va == vb) {
        ++inter;
        break;
      }
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

inline RefReport ref_score(const forest::PanopticFrame& pred,
                           const forest::PanopticFrame& gt) {
  RefReport report;

  // Stuff classes: plain semantic IoU with the shared degenerate rule.
  const auto stuff = [&](forest::SemanticLabel want, bool& degenerate) {
    std::size_t np = 0, ng = 0, ni = 0;
    for (std::size_t i = 0; i < pred.points.size(); ++i) {
      const bool p = pred.points.points[i].semantic == want;
      const bool g = gt.points.points[i].semantic == want;
      np += p;
      ng += g;
      ni += p && g;
    }
    if (np == 0 && ng == 0) {
      degenerate = true;
      return 1.0;
    }
    degenerate = false;
    if (np == 0 || ng == 0) return 0.0;
    return static_cast<double>(ni) / static_cast<double>(np + ng - ni);
  };
  report.ground = stuff(forest::SemanticLabel::Ground, report.ground_degenerate);
  report.shrub = stuff(forest::SemanticLabel::Shrub, report.shrub_degenerate);
  report.stem = stuff(forest::SemanticLabel::Stem, report.stem_degenerate);
  report.canopy = stuff(forest::SemanticLabel::Canopy, report.canopy_degenerate);

  // Thing class: every cross pair is scored; the half-overlap rule decides.
  const auto pred_inst = ref_instances(pred);
  const auto gt_inst = ref_instances(gt);
  std::set<std::uint32_t> matched_pred;
  std::set<std::uint32_t> matched_gt;
  for (const auto& [pid, pidx] : pred_inst) {
    for (const auto& [gid, gidx] : gt_inst) {
      const double score = ref_set_iou(pidx, gidx);
      if (score > 0.5) {
        if (matched_pred.count(pid) || matched_gt.count(gid)) {
          report.unique_matching = false;
        }
        report.pairs.push_back({pid, gid, score});
        matched_pred.insert(pid);
        matched_gt.insert(gid);
      }
    }
  }
  for (const auto& [pid, pidx] : pred_inst) {
    (void)pidx;
    if (!matched_pred.count(pid)) report.fp.push_back(pid);
  }
  for (const auto& [gid, gidx] : gt_inst) {
    (void)gidx;
    if (!matched_gt.count(gid)) report.fn.push_back(gid);
  }

  const double denom = static_cast<double>(report.pairs.size()) +
                       0.5 * static_cast<double>(report.fp.size()) +
                       0.5 * static_cast<double>(report.fn.size());
  if (denom == 0.0) {
    report.tree = 1.0;
    report.tree_degenerate = true;
  } else {
    double iou_sum = 0.0;
    for (const RefPair& pair : report.pairs) iou_sum += pair.iou;
    report.tree = iou_sum / denom;
  }

  report.overall = (report.ground + report.shrub + report.tree) / 3.0;
  return report;
}

}  // namespace pq_oracle
