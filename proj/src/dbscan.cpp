#include "forest/dbscan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <unordered_map>

#include "forest/error.hpp"

namespace forest {
namespace {

std::uint64_t cell_key(long long cx, long long cy) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cx)) << 32) |
         static_cast<std::uint32_t>(cy);
}

// Assembles clusters from per-point core flags and a neighbor oracle.
// Components are taken over core points only; border points join the
// cluster of their lowest-index core neighbor.
template <typename NeighborFn>
DbscanResult assemble(const PointCloud& cloud, const std::vector<char>& core,
                      NeighborFn&& neighbors_of) {
  const std::size_t n = cloud.size();
  DbscanResult result;
  result.labels.assign(n, -1);

  int next_label = 0;
  std::deque<std::size_t> queue;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (!core[seed] || result.labels[seed] != -1) continue;
    result.labels[seed] = next_label;
    queue.push_back(seed);
    while (!queue.empty()) {
      std::size_t j = queue.front();
      queue.pop_front();
      for (std::size_t nb : neighbors_of(j)) {
        if (!core[nb] || result.labels[nb] != -1) continue;
        result.labels[nb] = next_label;
        queue.push_back(nb);
      }
    }
    ++next_label;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    std::size_t owner = n;
    for (std::size_t nb : neighbors_of(i)) {
      if (core[nb] && nb < owner) owner = nb;
    }
    if (owner < n) {
      result.labels[i] = result.labels[owner];
    } else {
      result.noise.push_back(i);
    }
  }

  result.clusters.resize(static_cast<std::size_t>(next_label));
  for (std::size_t i = 0; i < n; ++i) {
    if (result.labels[i] < 0) continue;
    result.clusters[static_cast<std::size_t>(result.labels[i])].point_indices.push_back(i);
  }
  for (Cluster& cluster : result.clusters) {
    double sx = 0.0, sy = 0.0, sz = 0.0;
    for (std::size_t i : cluster.point_indices) {
      sx += cloud.points[i].x;
      sy += cloud.points[i].y;
      sz += cloud.points[i].z;
    }
    double inv = 1.0 / static_cast<double>(cluster.point_indices.size());
    cluster.cx = sx * inv;
    cluster.cy = sy * inv;
    cluster.cz = sz * inv;
  }
  return result;
}

void validate_args(double eps, int min_pts) {
  if (!(eps > 0.0)) throw Error("dbscan eps must be positive");
  if (min_pts < 1) throw Error("dbscan min_pts must be at least 1");
}

}  // namespace

DbscanResult dbscan_xy(const PointCloud& cloud, double eps, int min_pts) {
  validate_args(eps, min_pts);
  const std::size_t n = cloud.size();
  const double eps2 = eps * eps;

  std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;
  grid.reserve(n);
  std::vector<long long> cellx(n), celly(n);
  for (std::size_t i = 0; i < n; ++i) {
    cellx[i] = static_cast<long long>(std::floor(cloud.points[i].x / eps));
    celly[i] = static_cast<long long>(std::floor(cloud.points[i].y / eps));
    grid[cell_key(cellx[i], celly[i])].push_back(i);
  }

  auto neighbors_of = [&](std::size_t i) {
    std::vector<std::size_t> out;
    const double px = cloud.points[i].x;
    const double py = cloud.points[i].y;
    for (long long dy = -1; dy <= 1; ++dy) {
      for (long long dx = -1; dx <= 1; ++dx) {
        auto it = grid.find(cell_key(cellx[i] + dx, celly[i] + dy));
        if (it == grid.end()) continue;
        for (std::size_t j : it->second) {
          double ddx = cloud.points[j].x - px;
          double ddy = cloud.points[j].y - py;
          if (ddx * ddx + ddy * ddy <= eps2) out.push_back(j);
        }
      }
    }
    return out;
  };

  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    core[i] = neighbors_of(i).size() >= static_cast<std::size_t>(min_pts) ? 1 : 0;
  }
  return assemble(cloud, core, neighbors_of);
}

DbscanResult dbscan_xyz(const PointCloud& cloud, double eps, int min_pts) {
  validate_args(eps, min_pts);
  const std::size_t n = cloud.size();
  const double eps2 = eps * eps;

  auto key3 = [](long long cx, long long cy, long long cz) {
    std::uint64_t h = 1469598103934665603ull;
    for (long long v : {cx, cy, cz}) {
      h ^= static_cast<std::uint64_t>(v);
      h *= 1099511628211ull;
    }
    return h;
  };
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;
  grid.reserve(n);
  std::vector<long long> cellx(n), celly(n), cellz(n);
  for (std::size_t i = 0; i < n; ++i) {
    cellx[i] = static_cast<long long>(std::floor(cloud.points[i].x / eps));
    celly[i] = static_cast<long long>(std::floor(cloud.points[i].y / eps));
    cellz[i] = static_cast<long long>(std::floor(cloud.points[i].z / eps));
    grid[key3(cellx[i], celly[i], cellz[i])].push_back(i);
  }

  auto neighbors_of = [&](std::size_t i) {
    std::vector<std::size_t> out;
    const Point3& p = cloud.points[i];
    for (long long dz = -1; dz <= 1; ++dz) {
      for (long long dy = -1; dy <= 1; ++dy) {
        for (long long dx = -1; dx <= 1; ++dx) {
          auto it = grid.find(key3(cellx[i] + dx, celly[i] + dy, cellz[i] + dz));
          if (it == grid.end()) continue;
          for (std::size_t j : it->second) {
            double ddx = cloud.points[j].x - p.x;
            double ddy = cloud.points[j].y - p.y;
            double ddz = cloud.points[j].z - p.z;
            if (ddx * ddx + ddy * ddy + ddz * ddz <= eps2) out.push_back(j);
          }
        }
      }
    }
    // Distinct cells may share a hash bucket, so the same point can pass
    // the distance check twice; sort and dedupe for an exact list.
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };

  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    core[i] = neighbors_of(i).size() >= static_cast<std::size_t>(min_pts) ? 1 : 0;
  }
  return assemble(cloud, core, neighbors_of);
}

DbscanResult dbscan_xy_bruteforce(const PointCloud& cloud, double eps, int min_pts) {
  validate_args(eps, min_pts);
  const std::size_t n = cloud.size();
  const double eps2 = eps * eps;

  auto neighbors_of = [&](std::size_t i) {
    std::vector<std::size_t> out;
    const double px = cloud.points[i].x;
    const double py = cloud.points[i].y;
    for (std::size_t j = 0; j < n; ++j) {
      double ddx = cloud.points[j].x - px;
      double ddy = cloud.points[j].y - py;
      if (ddx * ddx + ddy * ddy <= eps2) out.push_back(j);
    }
    return out;
  };

  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    core[i] = neighbors_of(i).size() >= static_cast<std::size_t>(min_pts) ? 1 : 0;
  }
  return assemble(cloud, core, neighbors_of);
}

}  // namespace forest
