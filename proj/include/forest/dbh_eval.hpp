#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "forest/inventory.hpp"

namespace forest {

/// One surveyed tree from a ground-truth table.
struct GtTree {
  std::string plot_id;
  std::uint32_t tree_id = 0;
  double x = 0.0;
  double y = 0.0;
  double dbh_cm = 0.0;
};

/// Reads a `plot_id,tree_id,x,y,dbh_cm` table. Throws IoFailure on a
/// missing file or malformed row.
std::vector<GtTree> read_gt_csv(const std::string& path);

struct PlotMetrics {
  std::size_t gt_trees = 0;
  std::size_t matched = 0;
  double recall = 0.0;
  double rmse_cm = 0.0;  // 0.0 when nothing matched
};

struct DbhEvalReport {
  std::map<std::string, PlotMetrics> per_plot;
  // Pooled across every matched pair in every plot.
  double overall_recall = 0.0;
  double overall_rmse_cm = 0.0;
  // Unweighted means of the per-plot values.
  double per_plot_avg_recall = 0.0;
  double per_plot_avg_rmse_cm = 0.0;
};

/// Matches predicted trees to surveyed trees per plot and scores recall and
/// DBH error. Matching is one-to-one within `match_radius` meters, greedy by
/// ascending distance with ties broken by gt id then predicted id; pass
/// `optimal` to use maximum-cardinality assignment instead (sensitivity
/// checks). Ground-truth plots with no predictions count as recall 0. A
/// predicted plot with no ground-truth rows throws EmptyGroundTruth;
/// match_radius must be positive (Error).
DbhEvalReport eval_dbh(const std::map<std::string, ForestInventory>& pred,
                       const std::vector<GtTree>& gt, double match_radius,
                       bool optimal = false);

/// Writes per-plot rows plus `overall` and `per_plot_avg` summary rows.
void write_dbh_report_csv(const DbhEvalReport& report, const std::string& path);

/// Renders the report as a fixed-width text table, recall in percent.
std::string render_dbh_table(const DbhEvalReport& report);

}  // namespace forest
