#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "forestinv_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CmdResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out_path = dir / "stdout.txt";
  const fs::path err_path = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + FORESTINV_BIN + "\" " + args +
                          " > \"" + out_path.string() + "\" 2> \"" +
                          err_path.string() + "\"";
  const int rc = std::system(cmd.c_str());
  CmdResult result;
  if (rc != -1 && WIFEXITED(rc)) result.code = WEXITSTATUS(rc);
  result.out = read_file(out_path);
  result.err = read_file(err_path);
  return result;
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) {
    if (c == '\n') ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("version flag prints the tool banner") {
  const fs::path dir = scratch_dir("version");
  const CmdResult r = run_cli("--version", dir);
  CHECK(r.code == 0);
  CHECK(r.out.rfind("forestinv 0.1.0 (config schema ", 0) == 0);
  CHECK(r.err.empty());
}

TEST_CASE("bare invocation prints help and fails") {
  const fs::path dir = scratch_dir("bare");
  const CmdResult r = run_cli("", dir);
  CHECK(r.code == 1);
  CHECK(r.err.find("inventory") != std::string::npos);
  CHECK(r.err.find("eval") != std::string::npos);
}

TEST_CASE("parse errors exit with status 1") {
  const fs::path dir = scratch_dir("parse");
  CHECK(run_cli("inventory run --out " + (dir / "o").string(), dir).code == 1);
  CHECK(run_cli("--bogus-flag", dir).code == 1);
  const CmdResult bad_method =
      run_cli("inventory run --input a.ply --out o --method square", dir);
  CHECK(bad_method.code == 1);
  CHECK(bad_method.err.find("square") != std::string::npos);
}

TEST_CASE("missing input reports an error") {
  const fs::path dir = scratch_dir("missing");
  const CmdResult r = run_cli(
      "inventory run --input " + (dir / "nope.ply").string() + " --out " +
          (dir / "out").string(),
      dir);
  CHECK(r.code == 1);
  CHECK(r.err.find("error:") != std::string::npos);
  CHECK(r.err.find("does not exist") != std::string::npos);
}

TEST_CASE("config printing") {
  const fs::path dir = scratch_dir("config");
  const CmdResult defaults = run_cli("--print-config", dir);
  CHECK(defaults.code == 0);
  CHECK(defaults.out.rfind("assoc.radius_m=", 0) == 0);
  CHECK(defaults.out.find("method=circle\n") != std::string::npos);
  CHECK(defaults.out.find("dbscan.eps_m=") != std::string::npos);

  const fs::path cfg = dir / "override.cfg";
  {
    std::ofstream out(cfg);
    out << "# comment\n";
    out << "dbscan.eps_m = 0.2\n";
    out << "method=cylinder\n";
  }
  const CmdResult loaded =
      run_cli("config print --config " + cfg.string(), dir);
  CHECK(loaded.code == 0);
  CHECK(loaded.out.find("dbscan.eps_m=0.2\n") != std::string::npos);
  CHECK(loaded.out.find("method=cylinder\n") != std::string::npos);

  const fs::path bad = dir / "bad.cfg";
  {
    std::ofstream out(bad);
    out << "not a key value line\n";
  }
  const CmdResult rejected =
      run_cli("config print --config " + bad.string(), dir);
  CHECK(rejected.code == 1);
  CHECK(rejected.err.find("error:") != std::string::npos);
}

TEST_CASE("synth rejects invalid parameters") {
  const fs::path dir = scratch_dir("synth_bad");
  const CmdResult r =
      run_cli("synth forest --trees -3 --out " + (dir / "out").string(), dir);
  CHECK(r.code == 1);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("end to end plot workflow") {
  const fs::path dir = scratch_dir("chain");
  const fs::path synth_dir = dir / "synth";
  const fs::path inv_dir = dir / "inv";
  const fs::path pred_dir = dir / "pred";

  const CmdResult synth = run_cli(
      "synth forest --seed 5 --trees 8 --area-w 25 --area-h 25"
      " --dbh-min 25 --dbh-max 45 --spacing 3 --edge-margin 2 --sigma 0.008"
      " --points-per-tree 2000 --ground-density 8 --shrub-density 0.2"
      " --canopy --plot-id cloud --out " +
          synth_dir.string(),
      dir);
  CHECK(synth.code == 0);
  REQUIRE(fs::exists(synth_dir / "cloud.ply"));
  REQUIRE(fs::exists(synth_dir / "gt_trees.csv"));
  const std::string gt_text = read_file(synth_dir / "gt_trees.csv");
  CHECK(gt_text.rfind("plot_id,tree_id,x,y,dbh_cm\n", 0) == 0);
  CHECK(count_lines(gt_text) == 9);
  CHECK(gt_text.find("\ncloud,1,") != std::string::npos);

  const CmdResult inv = run_cli(
      "inventory run --input " + (synth_dir / "cloud.ply").string() +
          " --out " + inv_dir.string() + " --threads 2",
      dir);
  CHECK(inv.code == 0);
  CHECK(inv.err.find("payload 0: ") != std::string::npos);
  REQUIRE(fs::exists(inv_dir / "inventory.csv"));
  CHECK(fs::exists(inv_dir / "inventory.geojson"));
  CHECK(fs::exists(inv_dir / "flags.csv"));
  CHECK(fs::exists(inv_dir / "dtm_0.asc"));
  CHECK(fs::exists(inv_dir / "config.txt"));

  const std::string inv_text = read_file(inv_dir / "inventory.csv");
  CHECK(inv_text.rfind("tree_id,", 0) == 0);
  CHECK(count_lines(inv_text) == 9);

  const std::string geo_text = read_file(inv_dir / "inventory.geojson");
  CHECK(geo_text.rfind("{\"type\":\"FeatureCollection\"", 0) == 0);

  const std::string cfg_text = read_file(inv_dir / "config.txt");
  CHECK(cfg_text.find("method=circle\n") != std::string::npos);

  const std::string dtm_text = read_file(inv_dir / "dtm_0.asc");
  CHECK(dtm_text.rfind("ncols ", 0) == 0);

  fs::create_directories(pred_dir);
  fs::copy_file(inv_dir / "inventory.csv", pred_dir / "cloud.csv");
  const fs::path report = dir / "dbh_report.csv";
  const CmdResult dbh = run_cli(
      "eval dbh --pred " + pred_dir.string() + " --gt " +
          (synth_dir / "gt_trees.csv").string() + " --out " + report.string(),
      dir);
  CHECK(dbh.code == 0);
  CHECK(dbh.out.find("overall") != std::string::npos);
  CHECK(dbh.out.find("100.0") != std::string::npos);
  REQUIRE(fs::exists(report));
  CHECK(read_file(report).rfind(
            "plot_id,gt_trees,matched,recall,recall_percent,rmse_cm\n", 0) ==
        0);

  const CmdResult pq = run_cli(
      "eval pq --pred " + (synth_dir / "cloud.ply").string() + " --gt " +
          (synth_dir / "cloud.ply").string(),
      dir);
  CHECK(pq.code == 0);
  CHECK(pq.out.find("Ground  Shrub   Stem    Canopy  Tree    PQ\n") !=
        std::string::npos);
  CHECK(pq.out.find("100.0   100.0   100.0   100.0   100.0   100.0\n") !=
        std::string::npos);

  const CmdResult mismatch = run_cli(
      "eval dbh --pred " + (synth_dir / "gt_trees.csv").string() + " --gt " +
          (synth_dir / "gt_trees.csv").string(),
      dir);
  CHECK(mismatch.code == 1);
  CHECK(mismatch.err.find("error:") != std::string::npos);
}
