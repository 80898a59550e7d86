#include <gtest/gtest.h>

#include "navlab/sensing.hpp"
#include "navlab/world.hpp"

using namespace navlab;

TEST(Raycast, EmptyWorldMaxRange) {
  WorldSpec w = generate_maze(1, 0.0);
  Scan scan = raycast(w, {10, 10, 0}, 1.0, 16, 5.5);
  for (double r : scan.ranges) EXPECT_DOUBLE_EQ(r, 5.5);
}

TEST(Raycast, CylinderAhead) {
  WorldSpec w = generate_maze(1, 0.0);
  w.obstacles.push_back(make_cylinder(0.15, 12.0, 10.0));
  Scan scan = raycast(w, {10, 10, 0}, 0.1, 3, 5.5);
  // middle ray points straight at the cylinder two meters ahead
  EXPECT_NEAR(scan.ranges[1], 1.85, 1e-9);
}

TEST(Raycast, FrameInvariance) {
  // rotating both the pose and the world about the pose leaves ranges fixed
  WorldSpec w = generate_maze(1, 0.0);
  w.room_w = w.room_h = 40.0;
  Vec2 pivot{20.0, 20.0};
  w.obstacles.push_back(make_cylinder(0.3, 23.0, 21.0));
  w.obstacles.push_back(make_box(0.4, 0.6, 18.0, 22.5, 0.3));
  Scan base = raycast(w, {pivot.x, pivot.y, 0.2}, 1.2, 32, 3.0);

  double delta = 0.7;
  WorldSpec rotated = w;
  for (auto& o : rotated.obstacles) {
    Vec2 rel = o.pose.position() - pivot;
    Vec2 rot{rel.x * std::cos(delta) - rel.y * std::sin(delta),
             rel.x * std::sin(delta) + rel.y * std::cos(delta)};
    o.pose.x = pivot.x + rot.x;
    o.pose.y = pivot.y + rot.y;
    o.pose.theta += delta;
  }
  Scan turned = raycast(rotated, {pivot.x, pivot.y, 0.2 + delta}, 1.2, 32, 3.0);
  for (int i = 0; i < 32; ++i) EXPECT_NEAR(turned.ranges[i], base.ranges[i], 1e-9);
}

TEST(Raycast, BoxIntersection) {
  WorldSpec w = generate_maze(1, 0.0);
  w.obstacles.push_back(make_box(0.5, 0.5, 13.0, 10.0, 0.0));
  Scan scan = raycast(w, {10, 10, 0}, 0.1, 3, 5.5);
  EXPECT_NEAR(scan.ranges[1], 2.75, 1e-9);
}

TEST(Raycast, RoomBoundaryStopsRays) {
  WorldSpec w = generate_maze(1, 0.0);
  Scan scan = raycast(w, {19.0, 10.0, 0.0}, 0.1, 3, 5.5);
  EXPECT_NEAR(scan.ranges[1], 1.0, 1e-9);
}

namespace {

Scan make_scan(std::vector<double> angles, std::vector<double> ranges, double max_range) {
  Scan s;
  s.angles = std::move(angles);
  s.ranges = std::move(ranges);
  s.fov = 1.0;
  s.max_range = max_range;
  return s;
}

}  // namespace

TEST(Egocircle, RepeatedScanIsFixedPoint) {
  EgocircleConfig cfg;
  Egocircle ego(cfg);
  Scan scan = make_scan({0.0, 0.5, -0.5}, {2.0, 3.0, 4.0}, cfg.max_range);
  Transform2 identity = Transform2::from(0, 0, 0);
  ego.update(scan, identity, 0.1);
  ego.update(scan, identity, 0.1);
  EXPECT_NEAR(ego.min_range(ego.bin_of(0.0)), 2.0, 1e-9);
  EXPECT_NEAR(ego.min_range(ego.bin_of(0.5)), 3.0, 1e-9);
  EXPECT_NEAR(ego.min_range(ego.bin_of(-0.5)), 4.0, 1e-9);
}

TEST(Egocircle, ObstaclePersistsThroughRotation) {
  EgocircleConfig cfg;
  Egocircle ego(cfg);
  // obstacle seen 2 m ahead
  ego.update(make_scan({0.0}, {2.0}, cfg.max_range), Transform2::from(0, 0, 0), 0.1);
  // robot rotates half a turn; no new return there
  Scan empty = make_scan({0.0}, {cfg.max_range}, cfg.max_range);
  ego.update(empty, Transform2::from(0, 0, kPi), 0.1);
  // the stored point is now behind the robot
  double r = ego.min_range(ego.bin_of(kPi));
  EXPECT_NEAR(r, 2.0, 1e-6);
}

TEST(Egocircle, TranslationShortensStoredRange) {
  EgocircleConfig cfg;
  Egocircle ego(cfg);
  ego.update(make_scan({0.0}, {3.0}, cfg.max_range), Transform2::from(0, 0, 0), 0.1);
  // robot advances one meter toward the reading
  ego.update(make_scan({0.0}, {cfg.max_range}, cfg.max_range),
             Transform2::from(1.0, 0, 0), 0.1);
  EXPECT_NEAR(ego.min_range(ego.bin_of(0.0)), 2.0, 1e-6);
}

TEST(Egocircle, AgeLimitEvicts) {
  EgocircleConfig cfg;
  cfg.age_limit = 1.0;
  Egocircle ego(cfg);
  ego.update(make_scan({0.0}, {2.0}, cfg.max_range), Transform2::from(0, 0, 0), 0.1);
  Scan empty = make_scan({0.0}, {cfg.max_range}, cfg.max_range);
  for (int i = 0; i < 15; ++i) ego.update(empty, Transform2::from(0, 0, 0), 0.1);
  EXPECT_EQ(ego.min_range(ego.bin_of(0.0)), kInf);
}

TEST(Egocircle, PerBinCapHolds) {
  EgocircleConfig cfg;
  cfg.per_bin = 2;
  Egocircle ego(cfg);
  Transform2 identity = Transform2::from(0, 0, 0);
  for (double r : {4.0, 3.5, 3.0, 2.5})
    ego.update(make_scan({0.0}, {r}, cfg.max_range), identity, 0.1);
  EXPECT_LE(ego.bin(ego.bin_of(0.0)).size(), 2u);
  EXPECT_NEAR(ego.min_range(ego.bin_of(0.0)), 2.5, 1e-9);
}

TEST(Egocircle, RotatingSensorBuildsFullMap) {
  // with perfect odometry a narrow sensor converges to full-circle coverage
  WorldSpec w = generate_maze(21, 0.3);
  w = place_obstacles_uniform(w, 1.0, 3);
  SensorConfig sensor;
  EgocircleConfig cfg;
  Egocircle ego(cfg);
  Pose pose{10.0, 10.0, 0.0};
  ShapeIndex index(w);
  int steps = 64;
  Pose prev = pose;
  for (int i = 0; i <= steps; ++i) {
    pose.theta = wrap_angle(2.0 * kPi * 2.0 * i / steps);
    Transform2 odom = Transform2::from(0, 0, wrap_angle(pose.theta - prev.theta));
    ego.update(raycast(index, pose, sensor), odom, 0.05);
    prev = pose;
  }
  // compare against a 360-degree sensor at the final pose
  SensorConfig full;
  full.fov = 2.0 * kPi * (1.0 - 1e-9);
  full.n_rays = 1024;
  Scan reference = raycast(index, pose, full);
  int checked = 0;
  for (int b = 0; b < ego.n_bins(); ++b) {
    double stored = ego.min_range(b);
    if (stored == kInf) continue;
    // nearest reference ray in this bin direction
    double best = kInf;
    for (int i = 0; i < full.n_rays; ++i) {
      double a = reference.angles[i];
      if (ego.bin_of(a) == b) best = std::min(best, reference.ranges[i]);
    }
    if (best == kInf || best >= sensor.max_range - 1e-9) continue;
    EXPECT_NEAR(stored, best, 0.35) << "bin " << b;
    ++checked;
  }
  EXPECT_GT(checked, 32);
}

TEST(Observation, EmptyEgocircleAllOnes) {
  Egocircle ego;
  Observation obs = to_observation(ego);
  EXPECT_EQ(obs.size(), 128u);
  for (double v : obs) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Observation, MinThenNormalize) {
  EgocircleConfig cfg;
  cfg.max_range = 5.0;
  Egocircle ego(cfg);
  Transform2 identity = Transform2::from(0, 0, 0);
  ego.update(make_scan({0.0, 0.0}, {4.0, 2.0}, cfg.max_range), identity, 0.1);
  Observation obs = to_observation(ego);
  EXPECT_NEAR(obs[ego.bin_of(0.0)], 0.4, 1e-12);
}

TEST(Observation, FuzzedValuesInUnitRange) {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    WorldSpec w = generate_maze(trial, 0.3);
    w = place_obstacles_uniform(w, 1.0, trial);
    Egocircle ego;
    SensorConfig sensor;
    ShapeIndex index(w);
    Pose pose{rng.uniform(1.0, 19.0), rng.uniform(1.0, 19.0), rng.uniform(-kPi, kPi)};
    ego.update(raycast(index, pose, sensor), Transform2::from(0, 0, 0), 0.1);
    Observation obs = to_observation(ego);
    EXPECT_EQ(obs.size(), 128u);
    for (double v : obs) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}
