#include <gtest/gtest.h>

#include <cstdio>
#include <queue>
#include <set>

#include "navlab/world.hpp"
#include "navlab/world_io.hpp"

using namespace navlab;

namespace {

// Independent flood-fill oracle (BFS, 4-connected), separate from the
// library's connectivity helpers.
int count_free_components(const OccupancyGrid& g) {
  std::vector<char> visited(g.cells.size(), 0);
  int components = 0;
  for (int start = 0; start < static_cast<int>(g.cells.size()); ++start) {
    if (g.cells[start] || visited[start]) continue;
    ++components;
    std::queue<int> q;
    q.push(start);
    visited[start] = 1;
    while (!q.empty()) {
      int cur = q.front();
      q.pop();
      int ix = cur % g.width, iy = cur / g.width;
      const int d[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      for (auto& n : d) {
        int nx = ix + n[0], ny = iy + n[1];
        if (nx < 0 || ny < 0 || nx >= g.width || ny >= g.height) continue;
        int ni = ny * g.width + nx;
        if (g.cells[ni] || visited[ni]) continue;
        visited[ni] = 1;
        q.push(ni);
      }
    }
  }
  return components;
}

}  // namespace

TEST(GenerateMaze, ZeroDensityGivesEmptyRoom) {
  WorldSpec w = generate_maze(7, 0.0);
  EXPECT_EQ(w.room_w, 20.0);
  EXPECT_EQ(w.room_h, 20.0);
  EXPECT_TRUE(w.walls.empty());
}

TEST(GenerateMaze, DeterministicInSeed) {
  WorldSpec a = generate_maze(7, 0.2);
  WorldSpec b = generate_maze(7, 0.2);
  EXPECT_TRUE(a == b);
  WorldSpec c = generate_maze(8, 0.2);
  EXPECT_FALSE(a == c);
}

TEST(GenerateMaze, FreeSpaceConnected) {
  for (uint64_t seed : {1u, 2u, 3u, 11u, 47u}) {
    for (double density : {0.1, 0.3, 0.5}) {
      WorldSpec w = generate_maze(seed, density);
      OccupancyGrid g = rasterize(w, 0.1);
      EXPECT_EQ(count_free_components(g), 1)
          << "seed " << seed << " density " << density;
    }
  }
}

TEST(GenerateMaze, BlocksOnHalfMeterGrid) {
  WorldSpec w = generate_maze(3, 0.4);
  ASSERT_FALSE(w.walls.empty());
  for (const auto& wall : w.walls) {
    double fx = std::fmod(wall.center.x - 0.25, 0.5);
    double fy = std::fmod(wall.center.y - 0.25, 0.5);
    EXPECT_NEAR(fx, 0.0, 1e-12);
    EXPECT_NEAR(fy, 0.0, 1e-12);
  }
}

TEST(PlaceUniform, SpacingRespectedAndContained) {
  WorldSpec base = generate_maze(5, 0.0);
  WorldSpec w = place_obstacles_uniform(base, 0.75, 9);
  ASSERT_GT(w.obstacles.size(), 10u);
  for (size_t i = 0; i < w.obstacles.size(); ++i) {
    const auto& o = w.obstacles[i];
    EXPECT_GE(o.pose.x, o.radius);
    EXPECT_GE(o.pose.y, o.radius);
    EXPECT_LE(o.pose.x, w.room_w - o.radius);
    EXPECT_LE(o.pose.y, w.room_h - o.radius);
    for (size_t j = i + 1; j < w.obstacles.size(); ++j) {
      double d = (o.pose.position() - w.obstacles[j].pose.position()).norm();
      EXPECT_GE(d, 0.75 - 1e-12);
    }
  }
}

TEST(PlaceUniform, CountNonIncreasingInSpacing) {
  WorldSpec base = generate_maze(5, 0.2);
  size_t dense = place_obstacles_uniform(base, 0.75, 13).obstacles.size();
  size_t sparse = place_obstacles_uniform(base, 1.5, 13).obstacles.size();
  EXPECT_LE(sparse, dense);
}

TEST(PlaceUniform, NoWallOverlap) {
  WorldSpec base = generate_maze(5, 0.4);
  WorldSpec w = place_obstacles_uniform(base, 1.0, 21);
  for (const auto& o : w.obstacles)
    for (const auto& wall : w.walls) EXPECT_FALSE(obstacle_overlaps_wall(o, wall));
}

TEST(PlaceNonuniform, WithinRegionSpacingHolds) {
  WorldSpec base = generate_maze(6, 0.0);
  DensityField field;
  Rng rng(3);
  field = DensityField::random(rng);
  WorldSpec w = place_obstacles_nonuniform(base, field, 17);
  for (size_t i = 0; i < w.obstacles.size(); ++i)
    for (size_t j = i + 1; j < w.obstacles.size(); ++j) {
      const auto& a = w.obstacles[i];
      const auto& b = w.obstacles[j];
      int ar = static_cast<int>(a.pose.x / 4.0), ac = static_cast<int>(a.pose.y / 4.0);
      int br = static_cast<int>(b.pose.x / 4.0), bc = static_cast<int>(b.pose.y / 4.0);
      if (ar == br && ac == bc) {
        double d = (a.pose.position() - b.pose.position()).norm();
        EXPECT_GE(d, field.grid[std::min(ar, 4)][std::min(ac, 4)] - 1e-12);
      }
    }
}

TEST(PlaceNonuniform, UniformFieldMatchesUniformCounts) {
  WorldSpec base = generate_maze(6, 0.0);
  DensityField field = DensityField::uniform(1.5);
  double nonu_sum = 0.0, uni_sum = 0.0;
  const int n_seeds = 20;
  for (int s = 0; s < n_seeds; ++s) {
    nonu_sum += place_obstacles_nonuniform(base, field, 100 + s).obstacles.size();
    uni_sum += place_obstacles_uniform(base, 1.5, 200 + s).obstacles.size();
  }
  double nonu = nonu_sum / n_seeds, uni = uni_sum / n_seeds;
  EXPECT_NEAR(nonu, uni, 0.1 * uni);
}

TEST(PlaceNonuniform, DifferentFieldsDifferentObstacles) {
  WorldSpec base = generate_maze(6, 0.0);
  WorldSpec a = place_obstacles_nonuniform(base, DensityField::uniform(0.75), 5);
  WorldSpec b = place_obstacles_nonuniform(base, DensityField::uniform(1.5), 5);
  EXPECT_FALSE(a.obstacles == b.obstacles);
}

TEST(PlaceByCount, ZeroCountIdentity) {
  WorldSpec base = generate_maze(2, 0.3);
  WorldSpec w = place_obstacles_by_count(base, 0, eval_shape_set(), 1);
  EXPECT_TRUE(w == base);
}

TEST(PlaceByCount, ExactCountAndConnectivity) {
  WorldSpec base = generate_maze(2, 0.3);
  WorldSpec w = place_obstacles_by_count(base, 200, eval_shape_set(), 8);
  EXPECT_EQ(w.obstacles.size(), 200u);
  EXPECT_EQ(count_free_components(rasterize(w, 0.1)), 1);
  for (size_t i = 0; i < w.obstacles.size(); ++i)
    for (size_t j = i + 1; j < w.obstacles.size(); ++j)
      EXPECT_FALSE(obstacles_overlap(w.obstacles[i], w.obstacles[j]));
}

TEST(PlaceByCount, InfeasibleThrows) {
  WorldSpec base = generate_maze(2, 0.5);
  EXPECT_THROW(place_obstacles_by_count(base, 20000, eval_shape_set(), 1),
               PlacementInfeasible);
}

TEST(Rasterize, EmptyWorldAllFree) {
  WorldSpec w = generate_maze(1, 0.0);
  OccupancyGrid g = rasterize(w, 0.1);
  for (auto c : g.cells) EXPECT_EQ(c, 0);
}

TEST(Rasterize, CylinderDiscSize) {
  WorldSpec w = generate_maze(1, 0.0);
  w.obstacles.push_back(make_cylinder(0.15, 10.0, 10.0));
  OccupancyGrid g = rasterize(w, 0.05);
  // conservative: every cell within the disc occupied, nothing beyond one
  // cell of slack
  int occupied = 0;
  for (int iy = 0; iy < g.height; ++iy)
    for (int ix = 0; ix < g.width; ++ix) {
      Vec2 c = g.center(ix, iy);
      double d = (c - Vec2{10.0, 10.0}).norm();
      if (g.occupied(ix, iy)) {
        ++occupied;
        EXPECT_LE(d, 0.15 + 0.05 * 1.5) << "cell too far from the disc";
      } else {
        EXPECT_GE(d, 0.15 - 0.05 * 1.5) << "cell inside the disc left free";
      }
    }
  EXPECT_GT(occupied, 0);
}

TEST(Rasterize, ConservativeAcrossResolutions) {
  WorldSpec w = generate_maze(9, 0.3);
  w = place_obstacles_uniform(w, 1.0, 4);
  OccupancyGrid fine = rasterize(w, 0.05);
  OccupancyGrid coarse = rasterize(w, 0.10);
  // any occupied fine cell maps into an occupied coarse cell
  for (int iy = 0; iy < fine.height; ++iy)
    for (int ix = 0; ix < fine.width; ++ix) {
      if (!fine.occupied(ix, iy)) continue;
      Vec2 c = fine.center(ix, iy);
      EXPECT_TRUE(coarse.occupied(coarse.cell_x(c.x), coarse.cell_y(c.y)));
    }
}

TEST(Rasterize, SoundnessMonteCarlo) {
  WorldSpec w = generate_maze(12, 0.3);
  w = place_obstacles_uniform(w, 1.0, 7);
  OccupancyGrid g = rasterize(w, 0.05);
  Rng rng(99);
  for (int i = 0; i < 20000; ++i) {
    Vec2 p{rng.uniform(0.0, w.room_w), rng.uniform(0.0, w.room_h)};
    if (world_clearance(w, p) > 0.0) continue;  // free point
    // p inside some shape: its cell must be occupied
    EXPECT_TRUE(g.occupied(g.cell_x(p.x), g.cell_y(p.y)));
  }
}

TEST(SampleStartGoal, EmptyRoomSeparationAndDeterminism) {
  WorldSpec w = generate_maze(4, 0.0);
  auto [s1, g1] = sample_start_goal(w, 42, 8.0);
  auto [s2, g2] = sample_start_goal(w, 42, 8.0);
  EXPECT_TRUE(s1 == s2);
  EXPECT_TRUE(g1 == g2);
  EXPECT_GE((s1.position() - g1.position()).norm(), 8.0);
  EXPECT_TRUE(w.contains(s1.position()));
  EXPECT_TRUE(w.contains(g1.position()));
}

TEST(SampleStartGoal, WalledOffWorldsRejected) {
  // wall the room into two sealed halves
  WorldSpec w = generate_maze(4, 0.0);
  for (int by = 0; by < 40; ++by) w.walls.push_back({{10.25, 0.5 * by + 0.25}});
  // any returned pair must be on one side (same component); with a full wall
  // and large separation demands this is impossible
  EXPECT_THROW(sample_start_goal(w, 10, 25.0), NoValidPair);
  auto [s, g] = sample_start_goal(w, 10, 2.0);
  EXPECT_EQ(s.x < 10.25, g.x < 10.25);
}

TEST(LocalDensity, LookupAndBoundaries) {
  WorldSpec w = generate_maze(4, 0.0);
  w.density.grid[0][0] = 0.75;
  EXPECT_EQ(local_density(w, {2.0, 2.0}), 0.75);
  WorldSpec u = generate_maze(4, 0.0);
  u.density = DensityField::uniform(1.25);
  for (double x : {0.1, 7.3, 12.0, 19.9})
    for (double y : {0.5, 9.2, 16.0}) EXPECT_EQ(local_density(u, {x, y}), 1.25);
  // boundary points belong to the lower-index region
  WorldSpec b = generate_maze(4, 0.0);
  b.density.grid[0][0] = 0.75;
  b.density.grid[1][0] = 1.5;
  EXPECT_EQ(local_density(b, {4.0, 1.0}), 0.75);
  EXPECT_EQ(local_density(b, {4.0 + 1e-9, 1.0}), 1.5);
}

TEST(WorldIo, RoundTripExact) {
  WorldSpec w = generate_maze(31, 0.35);
  w = place_obstacles_by_count(w, 40, eval_shape_set(), 3);
  std::string path = testing::TempDir() + "world_roundtrip.json";
  save_world(w, path);
  WorldSpec loaded = load_world(path);
  EXPECT_TRUE(loaded == w);
  // saving again produces identical bytes
  std::string path2 = testing::TempDir() + "world_roundtrip2.json";
  save_world(loaded, path2);
  std::ifstream f1(path), f2(path2);
  std::string a((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  EXPECT_EQ(a, b);
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST(WorldIo, BadFormatRejected) {
  std::string path = testing::TempDir() + "bad_world.json";
  {
    std::ofstream f(path);
    f << "{\"format\": 99}";
  }
  EXPECT_THROW(load_world(path), IoError);
  std::remove(path.c_str());
}
