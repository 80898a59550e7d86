#pragma once

#include <cmath>
#include <set>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "navlab/errors.hpp"
#include "navlab/geometry.hpp"
#include "navlab/world.hpp"

namespace navlab {

struct GlobalPath {
  std::vector<Vec2> waypoints;  // after line-of-sight smoothing
  double length = 0.0;          // polyline length in meters
  double grid_cost = 0.0;       // optimal 8-connected cost before smoothing

  bool empty() const { return waypoints.empty(); }
};

inline double polyline_length(const std::vector<Vec2>& pts) {
  double len = 0.0;
  for (size_t i = 1; i < pts.size(); ++i) len += (pts[i] - pts[i - 1]).norm();
  return len;
}

inline double distance_to_path(const GlobalPath& path, const Vec2& position) {
  if (path.waypoints.empty()) throw Error("distance_to_path: empty path");
  if (path.waypoints.size() == 1) return (position - path.waypoints[0]).norm();
  double best = kInf;
  for (size_t i = 1; i < path.waypoints.size(); ++i)
    best = std::min(best, dist_point_segment(position, path.waypoints[i - 1],
                                             path.waypoints[i]));
  return best;
}

// True when the periodic replan timer has elapsed or an event forces a replan.
inline bool replan_clock(double f_gp, double sim_time, double last_plan_time,
                         bool special_event) {
  return special_event || (sim_time - last_plan_time >= 1.0 / f_gp - 1e-9);
}

// Straight segment between two points staying in free cells, sampled at half
// the grid resolution.
inline bool line_of_sight(const OccupancyGrid& g, const Vec2& a, const Vec2& b) {
  double len = (b - a).norm();
  int steps = std::max(1, static_cast<int>(std::ceil(len / (0.5 * g.resolution))));
  for (int i = 0; i <= steps; ++i) {
    Vec2 p = a + (b - a) * (static_cast<double>(i) / steps);
    if (g.occupied(g.cell_x(p.x), g.cell_y(p.y))) return false;
  }
  return true;
}

inline std::vector<Vec2> smooth_path(const OccupancyGrid& g, const std::vector<Vec2>& pts) {
  if (pts.size() <= 2) return pts;
  std::vector<Vec2> out;
  out.push_back(pts.front());
  size_t i = 0;
  while (i + 1 < pts.size()) {
    size_t j = pts.size() - 1;
    while (j > i + 1 && !line_of_sight(g, pts[i], pts[j])) --j;
    out.push_back(pts[j]);
    i = j;
  }
  return out;
}

// Incremental shortest-path search on an 8-connected occupancy grid.
// Straight moves cost resolution, diagonals sqrt(2)*resolution; a diagonal
// move requires both adjacent orthogonal cells free. Queue ties are broken by
// cell index so planning is deterministic.
class DStarLite {
 public:
  DStarLite(OccupancyGrid known, const Vec2& goal) : grid_(std::move(known)) {
    n_ = static_cast<size_t>(grid_.width) * grid_.height;
    g_.assign(n_, kInf);
    rhs_.assign(n_, kInf);
    in_queue_.assign(n_, Key{});
    queued_.assign(n_, 0);
    goal_ = snap_to_free(cell_of(goal));
    if (goal_ < 0) throw NoPath("goal is inside an obstacle");
    rhs_[goal_] = 0.0;
    last_start_ = goal_;
    push(goal_, calc_key(goal_));
  }

  const OccupancyGrid& map() const { return grid_; }

  void update_cells(const std::vector<std::pair<std::pair<int, int>, bool>>& changed) {
    for (const auto& [cell, occ] : changed) {
      int id = grid_.idx(cell.first, cell.second);
      if ((grid_.cells[id] != 0) == occ) continue;
      grid_.cells[id] = occ ? 1 : 0;
      refresh(id);
      int ix = cell.first, iy = cell.second;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          int nx = ix + dx, ny = iy + dy;
          if (grid_.in_bounds(nx, ny)) refresh(grid_.idx(nx, ny));
        }
    }
  }

  // Whether the straight polyline is still collision-free on the known map.
  bool path_blocked(const GlobalPath& path) const {
    for (size_t i = 1; i < path.waypoints.size(); ++i)
      if (!line_of_sight(grid_, path.waypoints[i - 1], path.waypoints[i])) return true;
    return false;
  }

  GlobalPath plan(const Vec2& start_pos, const Vec2& goal_pos) {
    int start = snap_to_free(cell_of(start_pos));
    if (start < 0) throw NoPath("start is inside an obstacle");
    km_ += heuristic(last_start_, start);
    last_start_ = start;
    compute_shortest_path(start);
    if (rhs_[start] >= kInf) throw NoPath("no path on known map");

    if (start == goal_ && (start_pos - goal_pos).norm() < 1e-12) {
      GlobalPath path;
      path.waypoints = {start_pos};
      return path;
    }

    std::vector<Vec2> cells;
    cells.push_back(start_pos);
    int cur = start;
    size_t guard = n_ + 2;
    while (cur != goal_ && guard-- > 0) {
      int best = -1;
      double best_cost = kInf;
      for_each_neighbor(cur, [&](int nbr, double c) {
        double total = c + g_[nbr];
        if (total < best_cost - 1e-12 ||
            (std::abs(total - best_cost) <= 1e-12 && nbr < best)) {
          best_cost = total;
          best = nbr;
        }
      });
      if (best < 0 || best_cost >= kInf) throw NoPath("path extraction failed");
      cur = best;
      cells.push_back(grid_.center(cur % grid_.width, cur / grid_.width));
    }
    if (cur != goal_) throw NoPath("path extraction did not reach goal");
    cells.push_back(goal_pos);

    GlobalPath path;
    path.grid_cost = rhs_[start];
    path.waypoints = smooth_path(grid_, cells);
    path.length = polyline_length(path.waypoints);
    return path;
  }

  // Optimal grid cost from a start cell, without extracting a path.
  double cost_from(const Vec2& start_pos) {
    int start = snap_to_free(cell_of(start_pos));
    if (start < 0) return kInf;
    km_ += heuristic(last_start_, start);
    last_start_ = start;
    compute_shortest_path(start);
    return rhs_[start];
  }

 private:
  struct Key {
    double k1 = 0.0, k2 = 0.0;
    bool operator<(const Key& o) const {
      if (k1 != o.k1) return k1 < o.k1;
      return k2 < o.k2;
    }
  };

  int cell_of(const Vec2& p) const {
    return grid_.idx(grid_.cell_x(p.x), grid_.cell_y(p.y));
  }

  // Nearest free cell within a small ring (the robot can stand fractionally
  // inside an inflated region); -1 if none.
  int snap_to_free(int id) const {
    if (!grid_.cells[id]) return id;
    int ix = id % grid_.width, iy = id / grid_.width;
    int max_r = static_cast<int>(std::ceil(0.4 / grid_.resolution));
    for (int r = 1; r <= max_r; ++r)
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          if (std::max(std::abs(dx), std::abs(dy)) != r) continue;
          int nx = ix + dx, ny = iy + dy;
          if (grid_.in_bounds(nx, ny) && !grid_.occupied(nx, ny))
            return grid_.idx(nx, ny);
        }
    return -1;
  }

  double heuristic(int a, int b) const {
    double dx = std::abs(a % grid_.width - b % grid_.width);
    double dy = std::abs(a / grid_.width - b / grid_.width);
    return grid_.resolution *
           (std::max(dx, dy) + (std::sqrt(2.0) - 1.0) * std::min(dx, dy));
  }

  Key calc_key(int s) const {
    double m = std::min(g_[s], rhs_[s]);
    return {m + heuristic(last_start_, s) + km_, m};
  }

  template <typename F>
  void for_each_neighbor(int id, F&& f) const {
    int ix = id % grid_.width, iy = id / grid_.width;
    if (grid_.cells[id]) return;
    static const int d[8][2] = {{1, 0},  {-1, 0}, {0, 1},  {0, -1},
                                {1, 1},  {1, -1}, {-1, 1}, {-1, -1}};
    for (int k = 0; k < 8; ++k) {
      int nx = ix + d[k][0], ny = iy + d[k][1];
      if (!grid_.in_bounds(nx, ny) || grid_.occupied(nx, ny)) continue;
      if (k >= 4) {
        // no corner cutting
        if (grid_.occupied(ix + d[k][0], iy) || grid_.occupied(ix, iy + d[k][1]))
          continue;
      }
      f(grid_.idx(nx, ny), k >= 4 ? std::sqrt(2.0) * grid_.resolution
                                  : grid_.resolution);
    }
  }

  void refresh(int u) {
    if (u != goal_) {
      double best = kInf;
      for_each_neighbor(u, [&](int nbr, double c) { best = std::min(best, c + g_[nbr]); });
      rhs_[u] = best;
    }
    if (grid_.cells[u]) {
      g_[u] = kInf;
      if (u != goal_) rhs_[u] = kInf;
    }
    update_vertex(u);
  }

  void push(int s, Key k) {
    queue_.insert({k.k1, k.k2, s});
    in_queue_[s] = k;
    queued_[s] = 1;
  }

  void erase(int s) {
    queue_.erase({in_queue_[s].k1, in_queue_[s].k2, s});
    queued_[s] = 0;
  }

  void update_vertex(int u) {
    bool inconsistent = g_[u] != rhs_[u];
    if (queued_[u]) erase(u);
    if (inconsistent) push(u, calc_key(u));
  }

  void compute_shortest_path(int start) {
    size_t guard = 64 * n_;
    while (!queue_.empty() && guard-- > 0) {
      auto top = *queue_.begin();
      Key k_old{std::get<0>(top), std::get<1>(top)};
      int u = std::get<2>(top);
      Key k_start = calc_key(start);
      if (!(k_old < k_start) && rhs_[start] == g_[start]) break;
      Key k_new = calc_key(u);
      if (k_old < k_new) {
        erase(u);
        push(u, k_new);
      } else if (g_[u] > rhs_[u]) {
        g_[u] = rhs_[u];
        erase(u);
        for_each_neighbor(u, [&](int s, double c) {
          if (s != goal_) rhs_[s] = std::min(rhs_[s], c + g_[u]);
          update_vertex(s);
        });
      } else {
        double g_old = g_[u];
        g_[u] = kInf;
        auto relax = [&](int s) {
          if (s != goal_) {
            double best = kInf;
            for_each_neighbor(s, [&](int nbr, double c) {
              best = std::min(best, c + g_[nbr]);
            });
            rhs_[s] = best;
          }
          update_vertex(s);
        };
        (void)g_old;
        for_each_neighbor(u, [&](int s, double c) {
          (void)c;
          relax(s);
        });
        relax(u);
      }
    }
  }

  OccupancyGrid grid_;
  size_t n_ = 0;
  std::vector<double> g_, rhs_;
  std::vector<Key> in_queue_;
  std::vector<uint8_t> queued_;
  std::set<std::tuple<double, double, int>> queue_;
  int goal_ = -1;
  int last_start_ = -1;
  double km_ = 0.0;
};

// Optimal path on the fully known world; used for rewards and path-length
// normalization, never exposed to the agent's observation.
inline GlobalPath shortest_path_oracle(const WorldSpec& world, const Pose& start,
                                       const Pose& goal,
                                       double resolution = kDefaultResolution) {
  DStarLite planner(rasterize(world, resolution), goal.position());
  return planner.plan(start.position(), goal.position());
}

}  // namespace navlab
