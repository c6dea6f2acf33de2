#include "forest/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "forest/error.hpp"

namespace forest {
namespace {

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0') {
    throw ConfigError("bad numeric value for " + key + ": '" + value + "'");
  }
  return v;
}

int parse_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  long v = std::strtol(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0') {
    throw ConfigError("bad integer value for " + key + ": '" + value + "'");
  }
  return static_cast<int>(v);
}

struct KeyHandler {
  std::string name;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&)> set;
};

std::vector<KeyHandler> make_key_table() {
  std::vector<KeyHandler> keys;
  auto add_double = [&keys](const std::string& name, double PipelineConfig::* field) {
    keys.push_back({name,
                    [field](const PipelineConfig& c) { return format_number(c.*field); },
                    [field, name](PipelineConfig& c, const std::string& v) {
                      c.*field = parse_double(name, v);
                    }});
  };
  auto add_int = [&keys](const std::string& name, int PipelineConfig::* field) {
    keys.push_back({name,
                    [field](const PipelineConfig& c) { return std::to_string(c.*field); },
                    [field, name](PipelineConfig& c, const std::string& v) {
                      c.*field = parse_int(name, v);
                    }});
  };

  add_double("payload.window_m", &PipelineConfig::payload_window_m);

  keys.push_back({"cloth.cell_size_m",
                  [](const PipelineConfig& c) { return format_number(c.cloth.cell_size_m); },
                  [](PipelineConfig& c, const std::string& v) {
                    c.cloth.cell_size_m = parse_double("cloth.cell_size_m", v);
                  }});
  keys.push_back({"cloth.rigidness",
                  [](const PipelineConfig& c) { return std::to_string(c.cloth.rigidness); },
                  [](PipelineConfig& c, const std::string& v) {
                    c.cloth.rigidness = parse_int("cloth.rigidness", v);
                  }});
  keys.push_back({"cloth.gravity_step_m",
                  [](const PipelineConfig& c) { return format_number(c.cloth.gravity_step_m); },
                  [](PipelineConfig& c, const std::string& v) {
                    c.cloth.gravity_step_m = parse_double("cloth.gravity_step_m", v);
                  }});
  keys.push_back({"cloth.max_iterations",
                  [](const PipelineConfig& c) { return std::to_string(c.cloth.max_iterations); },
                  [](PipelineConfig& c, const std::string& v) {
                    c.cloth.max_iterations = parse_int("cloth.max_iterations", v);
                  }});
  keys.push_back({"cloth.classification_threshold_m",
                  [](const PipelineConfig& c) {
                    return format_number(c.cloth.classification_threshold_m);
                  },
                  [](PipelineConfig& c, const std::string& v) {
                    c.cloth.classification_threshold_m =
                        parse_double("cloth.classification_threshold_m", v);
                  }});
  keys.push_back({"cloth.convergence_epsilon_m",
                  [](const PipelineConfig& c) {
                    return format_number(c.cloth.convergence_epsilon_m);
                  },
                  [](PipelineConfig& c, const std::string& v) {
                    c.cloth.convergence_epsilon_m =
                        parse_double("cloth.convergence_epsilon_m", v);
                  }});

  add_double("dtm.resolution_m", &PipelineConfig::dtm_resolution_m);
  add_double("dtm.fill_radius_m", &PipelineConfig::dtm_fill_radius_m);
  add_double("slice.low_m", &PipelineConfig::slice_low_m);
  add_double("slice.high_m", &PipelineConfig::slice_high_m);
  add_double("dbscan.eps_m", &PipelineConfig::dbscan_eps_m);
  add_int("dbscan.min_pts", &PipelineConfig::dbscan_min_pts);
  add_double("nms.radius_m", &PipelineConfig::nms_radius_m);
  add_double("hough.r_min_m", &PipelineConfig::hough_r_min_m);
  add_double("hough.r_max_m", &PipelineConfig::hough_r_max_m);
  add_double("hough.center_step_m", &PipelineConfig::hough_center_step_m);
  add_double("hough.radius_step_m", &PipelineConfig::hough_radius_step_m);
  add_double("fit.residual_max_m", &PipelineConfig::fit_residual_max_m);
  add_int("fit.min_trunk_points", &PipelineConfig::fit_min_trunk_points);
  add_double("fit.min_arc_deg", &PipelineConfig::fit_min_arc_deg);
  add_double("stem.low_m", &PipelineConfig::stem_low_m);
  add_double("stem.high_m", &PipelineConfig::stem_high_m);
  add_double("cyl.residual_max_m", &PipelineConfig::cyl_residual_max_m);
  add_double("assoc.radius_m", &PipelineConfig::assoc_radius_m);

  keys.push_back({"method",
                  [](const PipelineConfig& c) {
                    return std::string(c.method == FitMethod::Circle ? "circle" : "cylinder");
                  },
                  [](PipelineConfig& c, const std::string& v) {
                    if (v == "circle") {
                      c.method = FitMethod::Circle;
                    } else if (v == "cylinder") {
                      c.method = FitMethod::Cylinder;
                    } else {
                      throw ConfigError("method must be 'circle' or 'cylinder', got '" + v + "'");
                    }
                  }});
  add_int("runtime.threads", &PipelineConfig::runtime_threads);

  std::sort(keys.begin(), keys.end(),
            [](const KeyHandler& a, const KeyHandler& b) { return a.name < b.name; });
  return keys;
}

const std::vector<KeyHandler>& key_table() {
  static const std::vector<KeyHandler> keys = make_key_table();
  return keys;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

void apply_config_line(PipelineConfig& config, const std::string& line) {
  std::string stripped = line;
  std::size_t hash = stripped.find('#');
  if (hash != std::string::npos) stripped.resize(hash);
  stripped = trim(stripped);
  if (stripped.empty()) return;

  std::size_t eq = stripped.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("expected key=value, got '" + stripped + "'");
  }
  std::string key = trim(stripped.substr(0, eq));
  std::string value = trim(stripped.substr(eq + 1));
  for (const KeyHandler& handler : key_table()) {
    if (handler.name == key) {
      handler.set(config, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open config " + path);
  PipelineConfig config;
  std::string line;
  while (std::getline(in, line)) {
    apply_config_line(config, line);
  }
  validate_config(config);
  return config;
}

std::string dump_config(const PipelineConfig& config) {
  std::ostringstream out;
  for (const KeyHandler& handler : key_table()) {
    out << handler.name << "=" << handler.get(config) << "\n";
  }
  return out.str();
}

std::uint64_t config_fingerprint(const PipelineConfig& config) {
  return fnv1a(dump_config(config));
}

std::uint64_t config_schema_hash() {
  std::string names;
  for (const KeyHandler& handler : key_table()) {
    names += handler.name;
    names += '\n';
  }
  return fnv1a(names);
}

void validate_config(const PipelineConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(c.payload_window_m > 0.0, "payload.window_m must be positive");
  require(c.cloth.cell_size_m > 0.0, "cloth.cell_size_m must be positive");
  require(c.cloth.rigidness >= 1 && c.cloth.rigidness <= 3,
          "cloth.rigidness must be 1, 2, or 3");
  require(c.cloth.gravity_step_m > 0.0, "cloth.gravity_step_m must be positive");
  require(c.cloth.max_iterations > 0, "cloth.max_iterations must be positive");
  require(c.cloth.classification_threshold_m > 0.0,
          "cloth.classification_threshold_m must be positive");
  require(c.cloth.convergence_epsilon_m > 0.0,
          "cloth.convergence_epsilon_m must be positive");
  require(c.dtm_resolution_m > 0.0, "dtm.resolution_m must be positive");
  require(c.dtm_fill_radius_m >= 0.0, "dtm.fill_radius_m must be non-negative");
  require(c.slice_low_m < c.slice_high_m, "slice.low_m must be below slice.high_m");
  require(c.dbscan_eps_m > 0.0, "dbscan.eps_m must be positive");
  require(c.dbscan_min_pts >= 1, "dbscan.min_pts must be at least 1");
  require(c.nms_radius_m > 0.0, "nms.radius_m must be positive");
  require(c.hough_r_min_m > 0.0 && c.hough_r_min_m < c.hough_r_max_m,
          "hough radius range must satisfy 0 < r_min < r_max");
  require(c.hough_center_step_m > 0.0, "hough.center_step_m must be positive");
  require(c.hough_radius_step_m > 0.0, "hough.radius_step_m must be positive");
  require(c.fit_residual_max_m > 0.0, "fit.residual_max_m must be positive");
  require(c.fit_min_trunk_points >= 3, "fit.min_trunk_points must be at least 3");
  require(c.fit_min_arc_deg >= 0.0 && c.fit_min_arc_deg <= 360.0,
          "fit.min_arc_deg must be within [0, 360]");
  require(c.stem_low_m < c.stem_high_m, "stem.low_m must be below stem.high_m");
  require(c.cyl_residual_max_m > 0.0, "cyl.residual_max_m must be positive");
  require(c.assoc_radius_m > 0.0, "assoc.radius_m must be positive");
  require(c.runtime_threads >= 0, "runtime.threads must be non-negative");
}

}  // namespace forest
