#include "forest/dbh_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <tuple>

#include "forest/error.hpp"

namespace forest {

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

/// RFC 4180 field split: quoted fields may contain commas and doubled
/// quotes.
std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

double parse_field_double(const std::string& s, const std::string& path) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw IoFailure(path + ": bad numeric value '" + s + "'");
  }
  return v;
}

struct Candidate {
  double dist = 0.0;
  std::uint32_t gt_id = 0;
  int pred_id = 0;
  std::size_t pred_index = 0;
  std::size_t gt_index = 0;
};

struct PlotMatches {
  std::size_t matched = 0;
  std::vector<double> dbh_diff_cm;  // in match order
};

/// Greedy one-to-one matching by ascending distance, ties by gt id then
/// predicted id.
PlotMatches match_greedy(const std::vector<TreeInstance>& preds,
                         const std::vector<const GtTree*>& gts,
                         double radius) {
  std::vector<Candidate> candidates;
  for (std::size_t pi = 0; pi < preds.size(); ++pi) {
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      const double dist =
          std::hypot(preds[pi].x - gts[gi]->x, preds[pi].y - gts[gi]->y);
      if (dist <= radius) {
        candidates.push_back(
            {dist, gts[gi]->tree_id, preds[pi].tree_id, pi, gi});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              return std::tie(a.dist, a.gt_id, a.pred_id) <
                     std::tie(b.dist, b.gt_id, b.pred_id);
            });

  PlotMatches out;
  std::vector<bool> pred_used(preds.size(), false);
  std::vector<bool> gt_used(gts.size(), false);
  for (const Candidate& c : candidates) {
    if (pred_used[c.pred_index] || gt_used[c.gt_index]) continue;
    pred_used[c.pred_index] = true;
    gt_used[c.gt_index] = true;
    ++out.matched;
    out.dbh_diff_cm.push_back(preds[c.pred_index].dbh_cm - gts[c.gt_index]->dbh_cm);
  }
  return out;
}

bool augment(std::size_t pi, const std::vector<std::vector<std::size_t>>& adj,
             std::vector<int>& gt_owner, std::vector<bool>& visited) {
  for (const std::size_t gi : adj[pi]) {
    if (visited[gi]) continue;
    visited[gi] = true;
    if (gt_owner[gi] < 0 ||
        augment(static_cast<std::size_t>(gt_owner[gi]), adj, gt_owner, visited)) {
      gt_owner[gi] = static_cast<int>(pi);
      return true;
    }
  }
  return false;
}

/// Maximum-cardinality one-to-one matching over the same candidate graph,
/// via augmenting paths. Neighbor lists are distance-ordered so the result
/// is deterministic.
PlotMatches match_optimal(const std::vector<TreeInstance>& preds,
                          const std::vector<const GtTree*>& gts,
                          double radius) {
  std::vector<std::vector<std::size_t>> adj(preds.size());
  for (std::size_t pi = 0; pi < preds.size(); ++pi) {
    std::vector<Candidate> row;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      const double dist =
          std::hypot(preds[pi].x - gts[gi]->x, preds[pi].y - gts[gi]->y);
      if (dist <= radius) row.push_back({dist, gts[gi]->tree_id, 0, pi, gi});
    }
    std::sort(row.begin(), row.end(), [](const Candidate& a, const Candidate& b) {
      return std::tie(a.dist, a.gt_id) < std::tie(b.dist, b.gt_id);
    });
    for (const Candidate& c : row) adj[pi].push_back(c.gt_index);
  }

  std::vector<int> gt_owner(gts.size(), -1);
  for (std::size_t pi = 0; pi < preds.size(); ++pi) {
    std::vector<bool> visited(gts.size(), false);
    augment(pi, adj, gt_owner, visited);
  }

  PlotMatches out;
  for (std::size_t gi = 0; gi < gts.size(); ++gi) {
    if (gt_owner[gi] < 0) continue;
    ++out.matched;
    out.dbh_diff_cm.push_back(
        preds[static_cast<std::size_t>(gt_owner[gi])].dbh_cm - gts[gi]->dbh_cm);
  }
  return out;
}

double rmse(const std::vector<double>& diffs) {
  if (diffs.empty()) return 0.0;
  double sum_sq = 0.0;
  for (const double d : diffs) sum_sq += d * d;
  return std::sqrt(sum_sq / static_cast<double>(diffs.size()));
}

}  // namespace

std::vector<GtTree> read_gt_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoFailure(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "plot_id,tree_id,x,y,dbh_cm") {
    throw IoFailure(path + ": expected header plot_id,tree_id,x,y,dbh_cm");
  }
  std::vector<GtTree> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_row(line);
    if (fields.size() != 5) {
      throw IoFailure(path + ": expected 5 fields, got " +
                      std::to_string(fields.size()));
    }
    GtTree row;
    row.plot_id = fields[0];
    row.tree_id =
        static_cast<std::uint32_t>(parse_field_double(fields[1], path));
    row.x = parse_field_double(fields[2], path);
    row.y = parse_field_double(fields[3], path);
    row.dbh_cm = parse_field_double(fields[4], path);
    rows.push_back(row);
  }
  return rows;
}

DbhEvalReport eval_dbh(const std::map<std::string, ForestInventory>& pred,
                       const std::vector<GtTree>& gt, double match_radius,
                       bool optimal) {
  if (!(match_radius > 0.0)) throw Error("match_radius must be positive");

  std::map<std::string, std::vector<const GtTree*>> gt_by_plot;
  for (const GtTree& tree : gt) gt_by_plot[tree.plot_id].push_back(&tree);

  for (const auto& [plot_id, inventory] : pred) {
    (void)inventory;
    if (!gt_by_plot.count(plot_id)) {
      throw EmptyGroundTruth("no ground truth for plot " + plot_id);
    }
  }

  DbhEvalReport report;
  std::size_t total_gt = 0;
  std::size_t total_matched = 0;
  std::vector<double> pooled_diffs;
  static const std::vector<TreeInstance> kNoPreds;

  // Every ground-truth plot is scored; plots without predictions keep
  // recall 0.
  for (const auto& [plot_id, gts] : gt_by_plot) {
    const auto found = pred.find(plot_id);
    const std::vector<TreeInstance>& preds =
        found == pred.end() ? kNoPreds : found->second.trees;
    const PlotMatches matches = optimal ? match_optimal(preds, gts, match_radius)
                                        : match_greedy(preds, gts, match_radius);

    PlotMetrics metrics;
    metrics.gt_trees = gts.size();
    metrics.matched = matches.matched;
    metrics.recall =
        static_cast<double>(matches.matched) / static_cast<double>(gts.size());
    metrics.rmse_cm = rmse(matches.dbh_diff_cm);
    report.per_plot.emplace(plot_id, metrics);

    total_gt += gts.size();
    total_matched += matches.matched;
    pooled_diffs.insert(pooled_diffs.end(), matches.dbh_diff_cm.begin(),
                        matches.dbh_diff_cm.end());
  }

  report.overall_recall =
      total_gt == 0 ? 0.0
                    : static_cast<double>(total_matched) /
                          static_cast<double>(total_gt);
  report.overall_rmse_cm = rmse(pooled_diffs);

  if (!report.per_plot.empty()) {
    double recall_sum = 0.0;
    double rmse_sum = 0.0;
    for (const auto& [plot_id, metrics] : report.per_plot) {
      (void)plot_id;
      recall_sum += metrics.recall;
      rmse_sum += metrics.rmse_cm;
    }
    const double n = static_cast<double>(report.per_plot.size());
    report.per_plot_avg_recall = recall_sum / n;
    report.per_plot_avg_rmse_cm = rmse_sum / n;
  }
  return report;
}

void write_dbh_report_csv(const DbhEvalReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  out << "plot_id,gt_trees,matched,recall,recall_percent,rmse_cm\n";
  for (const auto& [plot_id, m] : report.per_plot) {
    out << plot_id << ',' << m.gt_trees << ',' << m.matched << ','
        << fixed(m.recall, 6) << ',' << fixed(m.recall * 100.0, 2) << ','
        << fixed(m.rmse_cm, 2) << '\n';
  }
  std::size_t total_gt = 0;
  std::size_t total_matched = 0;
  for (const auto& [plot_id, m] : report.per_plot) {
    (void)plot_id;
    total_gt += m.gt_trees;
    total_matched += m.matched;
  }
  out << "overall," << total_gt << ',' << total_matched << ','
      << fixed(report.overall_recall, 6) << ','
      << fixed(report.overall_recall * 100.0, 2) << ','
      << fixed(report.overall_rmse_cm, 2) << '\n';
  out << "per_plot_avg,,," << fixed(report.per_plot_avg_recall, 6) << ','
      << fixed(report.per_plot_avg_recall * 100.0, 2) << ','
      << fixed(report.per_plot_avg_rmse_cm, 2) << '\n';
  if (!out.flush()) throw IoFailure("failed writing " + path);
}

std::string render_dbh_table(const DbhEvalReport& report) {
  std::string text;
  auto line = [&text](const std::string& name, const std::string& recall,
                      const std::string& rmse_cm) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%-16s%-10s%s\n", name.c_str(),
                  recall.c_str(), rmse_cm.c_str());
    text += buf;
  };
  line("plot", "recall", "rmse_cm");
  for (const auto& [plot_id, m] : report.per_plot) {
    line(plot_id, fixed(m.recall * 100.0, 1), fixed(m.rmse_cm, 2));
  }
  line("per-plot avg", fixed(report.per_plot_avg_recall * 100.0, 1),
       fixed(report.per_plot_avg_rmse_cm, 2));
  line("overall", fixed(report.overall_recall * 100.0, 1),
       fixed(report.overall_rmse_cm, 2));
  return text;
}

}  // namespace forest
