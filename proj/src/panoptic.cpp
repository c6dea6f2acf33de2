#include "forest/panoptic.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <utility>

#include "forest/dbscan.hpp"
#include "forest/error.hpp"

namespace forest {

namespace {

/// Instance id of a point for matching purposes: 0 when the point is not
/// tree-classified or carries no id.
std::uint32_t tree_instance(const Point3& p) {
  if (!p.semantic || !is_tree(*p.semantic)) return kNoInstance;
  return p.instance.value_or(kNoInstance);
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

/// Semantic IoU for one label over index-aligned frames, with the same
/// degenerate convention as panoptic quality: absent from both sides is a
/// flagged 1.0, absent from one side is 0.
PqValue label_iou(const PanopticFrame& pred, const PanopticFrame& gt,
                  SemanticLabel want) {
  std::size_t inter = 0;
  std::size_t pred_n = 0;
  std::size_t gt_n = 0;
  for (std::size_t i = 0; i < pred.points.size(); ++i) {
    const bool in_pred = pred.points.points[i].semantic == want;
    const bool in_gt = gt.points.points[i].semantic == want;
    pred_n += in_pred;
    gt_n += in_gt;
    inter += in_pred && in_gt;
  }
  if (pred_n == 0 && gt_n == 0) return {1.0, true};
  if (pred_n == 0 || gt_n == 0) return {0.0, false};
  const std::size_t uni = pred_n + gt_n - inter;
  return {static_cast<double>(inter) / static_cast<double>(uni), false};
}

PqValue thing_pq(const Matching& m) {
  const double denom = static_cast<double>(m.pairs.size()) +
                       0.5 * static_cast<double>(m.fp.size()) +
                       0.5 * static_cast<double>(m.fn.size());
  if (denom == 0.0) return {1.0, true};
  // Pairs are sorted by pred id; summing in that order keeps the result
  // bit-stable across runs.
  double iou_sum = 0.0;
  for (const MatchPair& pair : m.pairs) iou_sum += pair.iou;
  return {iou_sum / denom, false};
}

void check_same_universe(const PanopticFrame& pred, const PanopticFrame& gt) {
  if (pred.points.size() != gt.points.size()) {
    throw Error("panoptic frames must cover the same points");
  }
}

}  // namespace

void validate_frame(const PanopticFrame& frame) {
  for (std::size_t i = 0; i < frame.points.size(); ++i) {
    const Point3& p = frame.points.points[i];
    if (!p.semantic) {
      throw Error("point " + std::to_string(i) + " has no semantic label");
    }
    if (p.instance && p.instance != kNoInstance && !is_tree(*p.semantic)) {
      throw Error("point " + std::to_string(i) +
                  " carries an instance id but is not stem or canopy");
    }
  }
}

double iou(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  if (a.empty() && b.empty()) {
    throw BothEmpty("iou of two empty sets is undefined");
  }
  std::vector<std::size_t> sa = a;
  std::vector<std::size_t> sb = b;
  std::sort(sa.begin(), sa.end());
  sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
  std::sort(sb.begin(), sb.end());
  sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
  std::size_t inter = 0;
  std::size_t ia = 0;
  std::size_t ib = 0;
  while (ia < sa.size() && ib < sb.size()) {
    if (sa[ia] < sb[ib]) {
      ++ia;
    } else if (sb[ib] < sa[ia]) {
      ++ib;
    } else {
      ++inter;
      ++ia;
      ++ib;
    }
  }
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

Matching match_instances(const PanopticFrame& pred, const PanopticFrame& gt) {
  check_same_universe(pred, gt);

  std::map<std::uint32_t, std::size_t> pred_count;
  std::map<std::uint32_t, std::size_t> gt_count;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> inter;
  for (std::size_t i = 0; i < pred.points.size(); ++i) {
    const std::uint32_t p = tree_instance(pred.points.points[i]);
    const std::uint32_t g = tree_instance(gt.points.points[i]);
    if (p != kNoInstance) ++pred_count[p];
    if (g != kNoInstance) ++gt_count[g];
    if (p != kNoInstance && g != kNoInstance) ++inter[{p, g}];
  }

  Matching out;
  std::set<std::uint32_t> matched_pred;
  std::set<std::uint32_t> matched_gt;
  // IoU > 0.5 means the overlap exceeds half of either segment, so a second
  // match for the same id is impossible; no assignment search needed. The
  // map iterates in ascending (pred, gt) order, so pairs come out sorted.
  for (const auto& [ids, overlap] : inter) {
    const std::size_t uni = pred_count[ids.first] + gt_count[ids.second] - overlap;
    const double score = static_cast<double>(overlap) / static_cast<double>(uni);
    if (score > 0.5) {
      out.pairs.push_back({ids.first, ids.second, score});
      matched_pred.insert(ids.first);
      matched_gt.insert(ids.second);
    }
  }
  for (const auto& [id, count] : pred_count) {
    (void)count;
    if (!matched_pred.count(id)) out.fp.push_back(id);
  }
  for (const auto& [id, count] : gt_count) {
    (void)count;
    if (!matched_gt.count(id)) out.fn.push_back(id);
  }
  return out;
}

PqValue pq_class(const PanopticFrame& pred, const PanopticFrame& gt, PqClass cls) {
  check_same_universe(pred, gt);
  switch (cls) {
    case PqClass::Ground:
      return label_iou(pred, gt, SemanticLabel::Ground);
    case PqClass::Shrub:
      return label_iou(pred, gt, SemanticLabel::Shrub);
    case PqClass::Tree:
      break;
  }
  return thing_pq(match_instances(pred, gt));
}

PQReport pq_overall(const PanopticFrame& pred, const PanopticFrame& gt) {
  validate_frame(pred);
  validate_frame(gt);
  check_same_universe(pred, gt);

  PQReport report;
  report.ground = label_iou(pred, gt, SemanticLabel::Ground);
  report.shrub = label_iou(pred, gt, SemanticLabel::Shrub);
  const Matching m = match_instances(pred, gt);
  report.tree = thing_pq(m);
  report.tree_tp = m.pairs.size();
  report.tree_fp = m.fp.size();
  report.tree_fn = m.fn.size();
  report.overall_pq =
      (report.ground.value + report.shrub.value + report.tree.value) / 3.0;
  report.stem_iou = label_iou(pred, gt, SemanticLabel::Stem);
  report.canopy_iou = label_iou(pred, gt, SemanticLabel::Canopy);
  return report;
}

std::vector<std::uint32_t> cluster_offsets(const PointCloud& cloud,
                                           const std::vector<Vec3>& offsets,
                                           double eps, int min_pts) {
  if (offsets.size() != cloud.size()) {
    throw Error("cluster_offsets needs one offset per point");
  }
  PointCloud shifted = cloud;
  for (std::size_t i = 0; i < shifted.points.size(); ++i) {
    shifted.points[i].x += offsets[i].x();
    shifted.points[i].y += offsets[i].y();
    shifted.points[i].z += offsets[i].z();
  }
  const DbscanResult result = dbscan_xyz(shifted, eps, min_pts);
  std::vector<std::uint32_t> ids(cloud.size(), 0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (result.labels[i] >= 0) {
      ids[i] = static_cast<std::uint32_t>(result.labels[i]) + 1;
    }
  }
  return ids;
}

void write_pq_report_csv(const PQReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  out << "metric,fraction,percent,flag\n";
  auto row = [&out](const char* name, const PqValue& v) {
    out << name << ',' << fixed(v.value, 6) << ',' << fixed(v.value * 100.0, 2)
        << ',' << (v.degenerate ? "degenerate" : "") << '\n';
  };
  row("pq_ground", report.ground);
  row("pq_shrub", report.shrub);
  row("pq_tree", report.tree);
  out << "pq_overall," << fixed(report.overall_pq, 6) << ','
      << fixed(report.overall_pq * 100.0, 2) << ",\n";
  row("iou_stem", report.stem_iou);
  row("iou_canopy", report.canopy_iou);
  out << "tree_tp," << report.tree_tp << ",,\n";
  out << "tree_fp," << report.tree_fp << ",,\n";
  out << "tree_fn," << report.tree_fn << ",,\n";
  if (!out.flush()) throw IoFailure("failed writing " + path);
}

std::string render_pq_table(const PQReport& report) {
  auto cell = [](const PqValue& v) {
    std::string s = fixed(v.value * 100.0, 1);
    if (v.degenerate) s += '*';
    return s;
  };
  const std::string names[6] = {"Ground", "Shrub", "Stem", "Canopy", "Tree", "PQ"};
  const std::string cells[6] = {cell(report.ground),   cell(report.shrub),
                                cell(report.stem_iou), cell(report.canopy_iou),
                                cell(report.tree),     fixed(report.overall_pq * 100.0, 1)};

  std::string text;
  for (const std::string* line : {&names[0], &cells[0]}) {
    for (int c = 0; c < 6; ++c) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%-8s", line[c].c_str());
      text += buf;
    }
    while (!text.empty() && text.back() == ' ') text.pop_back();
    text += '\n';
  }
  if (report.ground.degenerate || report.shrub.degenerate ||
      report.tree.degenerate || report.stem_iou.degenerate ||
      report.canopy_iou.degenerate) {
    text += "* class absent from both frames\n";
  }
  return text;
}

}  // namespace forest
