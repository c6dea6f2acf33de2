#include "forest/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "forest/config.hpp"
#include "forest/dbh_eval.hpp"
#include "forest/detector.hpp"
#include "forest/error.hpp"
#include "forest/inventory.hpp"
#include "forest/io.hpp"
#include "forest/panoptic.hpp"
#include "forest/payload.hpp"
#include "forest/synth.hpp"
#include "forest/terrain.hpp"

namespace fs = std::filesystem;

namespace forest {

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string version_line() {
  char buf[96];
  std::snprintf(buf, sizeof buf, "forestinv 0.1.0 (config schema %016llx)",
                static_cast<unsigned long long>(config_schema_hash()));
  return buf;
}

struct InventoryArgs {
  std::string input;
  std::string config_path;
  std::string out_dir;
  std::string method;
  int threads = -1;
};

int run_inventory(const InventoryArgs& args) {
  PipelineConfig config;
  if (!args.config_path.empty()) config = load_config(args.config_path);
  if (!args.method.empty()) apply_config_line(config, "method=" + args.method);
  if (args.threads >= 0) config.runtime_threads = args.threads;
  validate_config(config);

  std::vector<std::string> inputs;
  if (fs::is_directory(args.input)) {
    for (const auto& entry : fs::directory_iterator(args.input)) {
      if (entry.is_regular_file() && entry.path().extension() == ".ply") {
        inputs.push_back(entry.path().string());
      }
    }
    std::sort(inputs.begin(), inputs.end());
    if (inputs.empty()) throw IoFailure("no .ply files in " + args.input);
  } else if (fs::exists(args.input)) {
    inputs.push_back(args.input);
  } else {
    throw IoFailure("input path does not exist: " + args.input);
  }

  fs::create_directories(args.out_dir);

  ForestInventory inventory;
  inventory.plot_id = fs::path(args.input).stem().string();
  if (inventory.plot_id.empty()) inventory.plot_id = "plot";
  inventory.config_fingerprint = config_fingerprint(config);

  for (std::size_t k = 0; k < inputs.size(); ++k) {
    PayloadCloud payload;
    payload.cloud = read_point_cloud(inputs[k]);
    payload.pose = Pose::identity();
    payload.timestamp = static_cast<double>(k);
    const DetectResult result =
        detect_trees(payload, config, static_cast<int>(k));
    if (!result.cloth_converged) {
      std::cerr << "warning: cloth simulation hit the iteration cap on payload "
                << k << "\n";
    }
    write_esri_asc(result.dtm,
                   args.out_dir + "/dtm_" + std::to_string(k) + ".asc");
    associate(inventory, result.detections, config.assoc_radius_m);
    std::cerr << "payload " << k << ": " << result.detections.size()
              << " detections\n";
  }

  export_csv(inventory, args.out_dir + "/inventory.csv");
  export_geojson(inventory, args.out_dir + "/inventory.geojson");
  export_flags_csv(inventory, args.out_dir + "/flags.csv");
  std::ofstream cfg_out(args.out_dir + "/config.txt", std::ios::binary);
  if (!cfg_out) {
    throw IoFailure("cannot open " + args.out_dir + "/config.txt for writing");
  }
  cfg_out << dump_config(config);
  return 0;
}

int run_synth(const SynthConfig& config, const std::string& out_dir) {
  const SynthResult result = synth_forest(config);
  fs::create_directories(out_dir);
  write_point_cloud(result.cloud, out_dir + "/cloud.ply",
                    CloudFormat::PlyBinaryLe);
  const std::string gt_path = out_dir + "/gt_trees.csv";
  std::ofstream gt(gt_path, std::ios::binary);
  if (!gt) throw IoFailure("cannot open " + gt_path + " for writing");
  gt << "plot_id,tree_id,x,y,dbh_cm\n";
  for (const SynthTree& tree : result.truth.trees) {
    gt << result.truth.plot_id << ',' << tree.id << ',' << fixed(tree.x, 6)
       << ',' << fixed(tree.y, 6) << ',' << fixed(tree.dbh_cm, 2) << '\n';
  }
  if (!gt.flush()) throw IoFailure("failed writing " + gt_path);
  std::cerr << "wrote " << result.cloud.size() << " points, "
            << result.truth.trees.size() << " trees\n";
  return 0;
}

int run_eval_pq(const std::string& pred_path, const std::string& gt_path,
                const std::string& out_path) {
  PanopticFrame pred{read_point_cloud(pred_path)};
  PanopticFrame gt{read_point_cloud(gt_path)};
  if (pred.points.size() != gt.points.size()) {
    throw Error("point counts differ: " + std::to_string(pred.points.size()) +
                " in prediction vs " + std::to_string(gt.points.size()) +
                " in ground truth");
  }
  const PQReport report = pq_overall(pred, gt);
  if (!out_path.empty()) write_pq_report_csv(report, out_path);
  std::cout << render_pq_table(report);
  return 0;
}

int run_eval_dbh(const std::string& pred_dir, const std::string& gt_path,
                 double radius, bool optimal, const std::string& out_path) {
  if (!fs::is_directory(pred_dir)) {
    throw IoFailure("--pred must be a directory of per-plot CSV files");
  }
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(pred_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoFailure("no .csv files in " + pred_dir);

  std::map<std::string, ForestInventory> pred;
  for (const std::string& file : files) {
    ForestInventory inventory = import_csv(file);
    inventory.plot_id = fs::path(file).stem().string();
    pred[inventory.plot_id] = std::move(inventory);
  }

  const DbhEvalReport report =
      eval_dbh(pred, read_gt_csv(gt_path), radius, optimal);
  if (!out_path.empty()) write_dbh_report_csv(report, out_path);
  std::cout << render_dbh_table(report);
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"forest LiDAR inventory toolkit"};
  app.set_version_flag("--version", version_line());
  app.require_subcommand(0, 1);
  bool print_config = false;
  app.add_flag("--print-config", print_config,
               "print the default pipeline configuration and exit");

  InventoryArgs inv_args;
  CLI::App* inventory_cmd =
      app.add_subcommand("inventory", "run the detection pipeline");
  CLI::App* run_cmd =
      inventory_cmd->add_subcommand("run", "process payloads into an inventory");
  run_cmd->add_option("--input", inv_args.input,
                      "point cloud file or directory of payload .ply files")
      ->required();
  run_cmd->add_option("--config", inv_args.config_path, "key=value config file");
  run_cmd->add_option("--out", inv_args.out_dir, "output directory")->required();
  run_cmd->add_option("--method", inv_args.method, "fit method override")
      ->check(CLI::IsMember({"circle", "cylinder"}));
  run_cmd->add_option("--threads", inv_args.threads, "worker thread count");

  SynthConfig synth_config;
  std::string synth_out;
  CLI::App* synth_cmd = app.add_subcommand("synth", "synthetic data");
  CLI::App* forest_cmd =
      synth_cmd->add_subcommand("forest", "generate a labeled forest cloud");
  forest_cmd->add_option("--seed", synth_config.seed, "random seed");
  forest_cmd->add_option("--trees", synth_config.n_trees, "number of trees");
  forest_cmd->add_option("--area-w", synth_config.area_w_m, "area width [m]");
  forest_cmd->add_option("--area-h", synth_config.area_h_m, "area height [m]");
  forest_cmd->add_option("--dbh-min", synth_config.dbh_min_cm, "min DBH [cm]");
  forest_cmd->add_option("--dbh-max", synth_config.dbh_max_cm, "max DBH [cm]");
  forest_cmd->add_option("--spacing", synth_config.min_spacing_m,
                         "minimum tree spacing [m]");
  forest_cmd->add_option("--amplitude", synth_config.ground_amplitude_m,
                         "terrain amplitude [m]");
  forest_cmd->add_option("--wavelength", synth_config.ground_wavelength_m,
                         "terrain wavelength [m]");
  forest_cmd->add_option("--sigma", synth_config.trunk_noise_sigma_m,
                         "trunk radial noise [m]");
  forest_cmd->add_option("--points-per-tree", synth_config.points_per_tree,
                         "trunk points per tree");
  forest_cmd->add_option("--shrub-density", synth_config.shrub_density,
                         "shrub points per m^2");
  forest_cmd->add_flag("--canopy", synth_config.canopy, "emit canopy blobs");
  forest_cmd->add_option("--ground-density", synth_config.ground_density,
                         "ground points per m^2");
  forest_cmd->add_option("--trunk-height", synth_config.trunk_height_m,
                         "trunk height [m]");
  forest_cmd->add_option("--edge-margin", synth_config.edge_margin_m,
                         "tree keep-out band along the border [m]");
  forest_cmd->add_option("--arc-fraction", synth_config.arc_fraction,
                         "share of trees seen over a limited arc");
  forest_cmd->add_option("--arc-deg", synth_config.arc_deg,
                         "visible arc for limited trees [deg]");
  forest_cmd->add_option("--plot-id", synth_config.plot_id, "plot identifier");
  forest_cmd->add_option("--out", synth_out, "output directory")->required();

  std::string pq_pred, pq_gt, pq_out;
  std::string dbh_pred, dbh_gt, dbh_out;
  double dbh_radius = 0.5;
  bool dbh_optimal = false;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluation metrics");
  CLI::App* pq_cmd =
      eval_cmd->add_subcommand("pq", "panoptic quality of a labeled cloud");
  pq_cmd->add_option("--pred", pq_pred, "predicted labels")->required();
  pq_cmd->add_option("--gt", pq_gt, "ground-truth labels")->required();
  pq_cmd->add_option("--out", pq_out, "report CSV path");
  CLI::App* dbh_cmd =
      eval_cmd->add_subcommand("dbh", "recall and RMSE of DBH estimates");
  dbh_cmd->add_option("--pred", dbh_pred, "directory of per-plot inventory CSVs")
      ->required();
  dbh_cmd->add_option("--gt", dbh_gt, "ground-truth tree table CSV")->required();
  dbh_cmd->add_option("--radius", dbh_radius, "match radius [m]");
  dbh_cmd->add_flag("--optimal", dbh_optimal,
                    "maximum-cardinality matching instead of greedy");
  dbh_cmd->add_option("--out", dbh_out, "report CSV path");

  std::string config_print_path;
  CLI::App* config_cmd = app.add_subcommand("config", "configuration tools");
  CLI::App* print_cmd =
      config_cmd->add_subcommand("print", "print the effective configuration");
  print_cmd->add_option("--config", config_print_path,
                        "key=value file to load first");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (print_config) {
      std::cout << dump_config(PipelineConfig{});
      return 0;
    }
    if (run_cmd->parsed()) return run_inventory(inv_args);
    if (forest_cmd->parsed()) return run_synth(synth_config, synth_out);
    if (pq_cmd->parsed()) return run_eval_pq(pq_pred, pq_gt, pq_out);
    if (dbh_cmd->parsed()) {
      return run_eval_dbh(dbh_pred, dbh_gt, dbh_radius, dbh_optimal, dbh_out);
    }
    if (print_cmd->parsed()) {
      PipelineConfig config;
      if (!config_print_path.empty()) config = load_config(config_print_path);
      std::cout << dump_config(config);
      return 0;
    }
    std::cerr << app.help();
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace forest
