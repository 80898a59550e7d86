#pragma once

#include <cmath>
#include <vector>

#include "navlab/geometry.hpp"
#include "navlab/world.hpp"

namespace navlab {

struct SensorConfig {
  double fov = 58.0 * kPi / 180.0;  // depth-camera-like field of view
  int n_rays = 128;
  double max_range = 5.5;
};

struct Scan {
  std::vector<double> angles;  // sensor frame, relative to robot heading
  std::vector<double> ranges;  // (0, max_range]; max_range encodes no return
  double fov = 0.0;
  double max_range = 0.0;
};

// Spatial index over world shapes so repeated raycasts only test nearby ones.
class ShapeIndex {
 public:
  explicit ShapeIndex(const WorldSpec& world, double cell = 2.0)
      : world_(&world), cell_(cell) {
    nx_ = std::max(1, static_cast<int>(std::ceil(world.room_w / cell_)));
    ny_ = std::max(1, static_cast<int>(std::ceil(world.room_h / cell_)));
    bins_.resize(static_cast<size_t>(nx_) * ny_);
    for (size_t i = 0; i < world.walls.size(); ++i)
      insert(world.walls[i].center, 0.5 * kWallSide * 1.4143, static_cast<int>(i), true);
    for (size_t i = 0; i < world.obstacles.size(); ++i)
      insert(world.obstacles[i].pose.position(), world.obstacles[i].max_extent(),
             static_cast<int>(i), false);
  }

  // All shapes whose bounding circle may lie within `radius` of `p`.
  void query(const Vec2& p, double radius, std::vector<int>& walls,
             std::vector<int>& obstacles) const {
    walls.clear();
    obstacles.clear();
    int x0 = std::clamp(static_cast<int>((p.x - radius) / cell_), 0, nx_ - 1);
    int x1 = std::clamp(static_cast<int>((p.x + radius) / cell_), 0, nx_ - 1);
    int y0 = std::clamp(static_cast<int>((p.y - radius) / cell_), 0, ny_ - 1);
    int y1 = std::clamp(static_cast<int>((p.y + radius) / cell_), 0, ny_ - 1);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        for (const auto& e : bins_[y * nx_ + x])
          (e.second ? walls : obstacles).push_back(e.first);
  }

  const WorldSpec& world() const { return *world_; }

 private:
  void insert(const Vec2& c, double extent, int id, bool is_wall) {
    int x0 = std::clamp(static_cast<int>((c.x - extent) / cell_), 0, nx_ - 1);
    int x1 = std::clamp(static_cast<int>((c.x + extent) / cell_), 0, nx_ - 1);
    int y0 = std::clamp(static_cast<int>((c.y - extent) / cell_), 0, ny_ - 1);
    int y1 = std::clamp(static_cast<int>((c.y + extent) / cell_), 0, ny_ - 1);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) bins_[y * nx_ + x].emplace_back(id, is_wall);
  }

  const WorldSpec* world_;
  double cell_;
  int nx_ = 0, ny_ = 0;
  std::vector<std::vector<std::pair<int, bool>>> bins_;
};

inline double ray_range(const ShapeIndex& index, const Vec2& origin, const Vec2& dir,
                        double max_range, std::vector<int>& wall_scratch,
                        std::vector<int>& obs_scratch) {
  const WorldSpec& w = index.world();
  double best = std::min(max_range, ray_room_exit(origin, dir, w.room_w, w.room_h));
  index.query(origin, best, wall_scratch, obs_scratch);
  const double h = 0.5 * kWallSide;
  for (int i : wall_scratch) {
    auto t = ray_aabb(origin, dir, w.walls[i].center, h, h);
    if (t && *t < best) best = *t;
  }
  for (int i : obs_scratch) {
    const Obstacle& o = w.obstacles[i];
    std::optional<double> t =
        o.shape == Obstacle::Shape::cylinder
            ? ray_circle(origin, dir, o.pose.position(), o.radius)
            : ray_obb(origin, dir, o.pose, 0.5 * o.width, 0.5 * o.height);
    if (t && *t < best) best = *t;
  }
  return best;
}

inline Scan raycast(const WorldSpec& world, const Pose& pose, double fov, int n_rays,
                    double max_range) {
  if (n_rays < 2) throw Error("raycast: need at least 2 rays");
  ShapeIndex index(world);
  Scan scan;
  scan.fov = fov;
  scan.max_range = max_range;
  scan.angles.resize(n_rays);
  scan.ranges.resize(n_rays);
  std::vector<int> ws, os;
  for (int i = 0; i < n_rays; ++i) {
    double a = -0.5 * fov + fov * i / (n_rays - 1);
    scan.angles[i] = a;
    Vec2 dir = polar(pose.theta + a, 1.0);
    scan.ranges[i] = ray_range(index, pose.position(), dir, max_range, ws, os);
  }
  return scan;
}

inline Scan raycast(const ShapeIndex& index, const Pose& pose, const SensorConfig& cfg) {
  Scan scan;
  scan.fov = cfg.fov;
  scan.max_range = cfg.max_range;
  scan.angles.resize(cfg.n_rays);
  scan.ranges.resize(cfg.n_rays);
  std::vector<int> ws, os;
  for (int i = 0; i < cfg.n_rays; ++i) {
    double a = -0.5 * cfg.fov + cfg.fov * i / (cfg.n_rays - 1);
    scan.angles[i] = a;
    Vec2 dir = polar(pose.theta + a, 1.0);
    scan.ranges[i] = ray_range(index, pose.position(), dir, cfg.max_range, ws, os);
  }
  return scan;
}

struct EgocircleConfig {
  int n_bins = 128;
  int per_bin = 2;        // retained measurements per angular sector
  double max_range = 5.5;
  double age_limit = 30.0;  // simulated seconds
};

// Egocentric polar obstacle memory. Points are kept in the robot frame and
// re-anchored whenever the robot moves, so obstacles seen earlier persist
// outside the current field of view.
class Egocircle {
 public:
  struct Point {
    Vec2 p;      // robot frame
    double age;  // seconds since measured
  };

  explicit Egocircle(const EgocircleConfig& cfg = {}) : cfg_(cfg), bins_(cfg.n_bins) {}

  const EgocircleConfig& config() const { return cfg_; }

  int bin_of(double angle) const {
    int b = static_cast<int>(wrap_angle_2pi(angle) / (2.0 * kPi) * cfg_.n_bins);
    return std::min(b, cfg_.n_bins - 1);
  }

  // odom_delta: pose of the new robot frame expressed in the old robot frame.
  void update(const Scan& scan, const Transform2& odom_delta, double dt) {
    Transform2 inv = odom_delta.inverse();
    std::vector<Point> carried;
    carried.reserve(64);
    for (auto& bin : bins_) {
      for (auto& pt : bin) {
        pt.age += dt;
        if (pt.age > cfg_.age_limit) continue;
        Point moved{inv.apply(pt.p), pt.age};
        if (moved.p.norm() > cfg_.max_range) continue;
        carried.push_back(moved);
      }
      bin.clear();
    }
    for (const auto& pt : carried) insert(pt);
    for (size_t i = 0; i < scan.ranges.size(); ++i) {
      if (scan.ranges[i] >= scan.max_range - 1e-9) continue;  // no return
      insert({polar(scan.angles[i], scan.ranges[i]), 0.0});
    }
  }

  // Minimum stored range in a bin; +inf when empty.
  double min_range(int bin) const {
    double best = kInf;
    for (const auto& pt : bins_[bin]) best = std::min(best, pt.p.norm());
    return best;
  }

  const std::vector<Point>& bin(int i) const { return bins_[i]; }
  int n_bins() const { return cfg_.n_bins; }

  // Best obstacle point per bin within the given range cutoff, robot frame.
  std::vector<Vec2> obstacle_points(double cutoff) const {
    std::vector<Vec2> pts;
    for (const auto& bin : bins_) {
      const Point* best = nullptr;
      double best_r = cutoff;
      for (const auto& pt : bin) {
        double r = pt.p.norm();
        if (r <= best_r) {
          best_r = r;
          best = &pt;
        }
      }
      if (best) pts.push_back(best->p);
    }
    return pts;
  }

 private:
  void insert(const Point& pt) {
    double r = pt.p.norm();
    if (r > cfg_.max_range || r <= 0.0) return;
    auto& bin = bins_[bin_of(std::atan2(pt.p.y, pt.p.x))];
    bin.push_back(pt);
    if (static_cast<int>(bin.size()) > cfg_.per_bin) {
      // keep the closest measurements
      std::sort(bin.begin(), bin.end(),
                [](const Point& a, const Point& b) { return a.p.norm_sq() < b.p.norm_sq(); });
      bin.resize(cfg_.per_bin);
    }
  }

  EgocircleConfig cfg_;
  std::vector<std::vector<Point>> bins_;
};

using Observation = std::vector<double>;

inline Observation to_observation(const Egocircle& ego) {
  Observation obs(ego.n_bins(), 1.0);
  for (int b = 0; b < ego.n_bins(); ++b) {
    double r = ego.min_range(b);
    if (r < kInf) obs[b] = std::clamp(r / ego.config().max_range, 0.0, 1.0);
  }
  return obs;
}

}  // namespace navlab
