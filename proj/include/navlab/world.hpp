#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "navlab/errors.hpp"
#include "navlab/geometry.hpp"
#include "navlab/rng.hpp"

namespace navlab {

inline constexpr double kWallSide = 0.5;
inline constexpr double kMazeRoomSize = 20.0;
inline constexpr double kRegionSize = 4.0;  // 5x5 partition of a 20 m room
inline constexpr double kDefaultResolution = 0.05;
inline constexpr double kDefaultRobotRadius = 0.18;

inline const std::array<double, 4> kSpacings = {0.75, 1.0, 1.25, 1.5};

// Square block of side kWallSide, tile-aligned (centers on the half-meter grid).
struct WallBlock {
  Vec2 center;
  bool operator==(const WallBlock& o) const { return center == o.center; }
};

struct Obstacle {
  enum class Shape { cylinder, box };
  Shape shape = Shape::cylinder;
  double radius = 0.0;           // cylinder
  double width = 0.0, height = 0.0;  // box
  Pose pose;

  bool operator==(const Obstacle& o) const {
    return shape == o.shape && radius == o.radius && width == o.width &&
           height == o.height && pose == o.pose;
  }

  double max_extent() const {
    return shape == Shape::cylinder ? radius : 0.5 * std::hypot(width, height);
  }
};

inline Obstacle make_cylinder(double radius, double x, double y) {
  Obstacle o;
  o.shape = Obstacle::Shape::cylinder;
  o.radius = radius;
  o.pose = {x, y, 0.0};
  return o;
}

inline Obstacle make_box(double width, double height, double x, double y, double theta) {
  Obstacle o;
  o.shape = Obstacle::Shape::box;
  o.width = width;
  o.height = height;
  o.pose = {x, y, theta};
  return o;
}

// Per-region minimum inter-obstacle spacing over the 5x5 partition.
struct DensityField {
  std::array<std::array<double, 5>, 5> grid;  // [ix][iy]

  DensityField() {
    for (auto& col : grid) col.fill(1.5);
  }

  static DensityField uniform(double spacing) {
    DensityField f;
    for (auto& col : f.grid) col.fill(spacing);
    return f;
  }

  static DensityField random(Rng& rng) {
    DensityField f;
    for (auto& col : f.grid)
      for (double& v : col) v = kSpacings[rng.index(kSpacings.size())];
    return f;
  }

  bool operator==(const DensityField& o) const { return grid == o.grid; }
};

struct WorldSpec {
  double room_w = kMazeRoomSize;
  double room_h = kMazeRoomSize;
  std::vector<WallBlock> walls;
  std::vector<Obstacle> obstacles;
  DensityField density;
  uint64_t seed = 0;

  bool operator==(const WorldSpec& o) const {
    return room_w == o.room_w && room_h == o.room_h && walls == o.walls &&
           obstacles == o.obstacles && density == o.density && seed == o.seed;
  }

  bool contains(const Vec2& p) const {
    return p.x >= 0 && p.y >= 0 && p.x <= room_w && p.y <= room_h;
  }
};

struct OccupancyGrid {
  double resolution = kDefaultResolution;
  int width = 0, height = 0;
  std::vector<uint8_t> cells;  // 1 = occupied

  int idx(int ix, int iy) const { return iy * width + ix; }
  bool in_bounds(int ix, int iy) const {
    return ix >= 0 && iy >= 0 && ix < width && iy < height;
  }
  bool occupied(int ix, int iy) const { return cells[idx(ix, iy)] != 0; }
  void set(int ix, int iy, bool occ) { cells[idx(ix, iy)] = occ ? 1 : 0; }

  int cell_x(double x) const {
    return std::clamp(static_cast<int>(std::floor(x / resolution)), 0, width - 1);
  }
  int cell_y(double y) const {
    return std::clamp(static_cast<int>(std::floor(y / resolution)), 0, height - 1);
  }
  Vec2 center(int ix, int iy) const {
    return {(ix + 0.5) * resolution, (iy + 0.5) * resolution};
  }
};

// ---- shape-level collision predicates ----

inline bool obstacle_overlaps_wall(const Obstacle& o, const WallBlock& w) {
  const double h = 0.5 * kWallSide;
  if (o.shape == Obstacle::Shape::cylinder)
    return circle_aabb_overlap(o.pose.position(), o.radius, w.center, h, h);
  return obb_aabb_overlap(o.pose, 0.5 * o.width, 0.5 * o.height, w.center, h, h);
}

inline bool obstacles_overlap(const Obstacle& a, const Obstacle& b) {
  using S = Obstacle::Shape;
  if (a.shape == S::cylinder && b.shape == S::cylinder)
    return circle_circle_overlap(a.pose.position(), a.radius, b.pose.position(), b.radius);
  if (a.shape == S::cylinder)
    return circle_obb_overlap(a.pose.position(), a.radius, b.pose, 0.5 * b.width, 0.5 * b.height);
  if (b.shape == S::cylinder)
    return circle_obb_overlap(b.pose.position(), b.radius, a.pose, 0.5 * a.width, 0.5 * a.height);
  return obb_obb_overlap(a.pose, 0.5 * a.width, 0.5 * a.height,
                         b.pose, 0.5 * b.width, 0.5 * b.height);
}

// Distance from a point to the boundary-or-interior of a shape (0 inside).
inline double dist_point_obstacle(const Vec2& p, const Obstacle& o) {
  if (o.shape == Obstacle::Shape::cylinder)
    return std::max(0.0, (p - o.pose.position()).norm() - o.radius);
  return dist_point_obb(p, o.pose, 0.5 * o.width, 0.5 * o.height);
}

inline double dist_point_wall(const Vec2& p, const WallBlock& w) {
  return dist_point_aabb(p, w.center, 0.5 * kWallSide, 0.5 * kWallSide);
}

// Clearance from a point to the nearest wall, obstacle, or room boundary.
inline double world_clearance(const WorldSpec& w, const Vec2& p) {
  double d = std::min({p.x, p.y, w.room_w - p.x, w.room_h - p.y});
  for (const auto& wall : w.walls) d = std::min(d, dist_point_wall(p, wall));
  for (const auto& obs : w.obstacles) d = std::min(d, dist_point_obstacle(p, obs));
  return d;
}

// ---- rasterization ----

inline OccupancyGrid rasterize(const WorldSpec& world, double resolution = kDefaultResolution) {
  if (resolution <= 0.0) throw Error("rasterize: resolution must be positive");
  OccupancyGrid g;
  g.resolution = resolution;
  g.width = static_cast<int>(std::ceil(world.room_w / resolution - 1e-9));
  g.height = static_cast<int>(std::ceil(world.room_h / resolution - 1e-9));
  g.cells.assign(static_cast<size_t>(g.width) * g.height, 0);

  auto mark = [&](double x0, double y0, double x1, double y1, auto&& hit) {
    int ix0 = std::max(0, static_cast<int>(std::floor(x0 / resolution)));
    int iy0 = std::max(0, static_cast<int>(std::floor(y0 / resolution)));
    int ix1 = std::min(g.width - 1, static_cast<int>(std::floor(x1 / resolution)));
    int iy1 = std::min(g.height - 1, static_cast<int>(std::floor(y1 / resolution)));
    for (int iy = iy0; iy <= iy1; ++iy)
      for (int ix = ix0; ix <= ix1; ++ix) {
        if (g.cells[g.idx(ix, iy)]) continue;
        double cx0 = ix * resolution, cy0 = iy * resolution;
        if (hit(cx0, cy0, cx0 + resolution, cy0 + resolution)) g.set(ix, iy, true);
      }
  };

  const double h = 0.5 * kWallSide;
  for (const auto& w : world.walls) {
    mark(w.center.x - h, w.center.y - h, w.center.x + h, w.center.y + h,
         [&](double a, double b, double c, double d) {
           return rect_obb_overlap(a, b, c, d, Pose{w.center.x, w.center.y, 0.0}, h, h);
         });
  }
  for (const auto& o : world.obstacles) {
    double e = o.max_extent();
    if (o.shape == Obstacle::Shape::cylinder) {
      mark(o.pose.x - e, o.pose.y - e, o.pose.x + e, o.pose.y + e,
           [&](double a, double b, double c, double d) {
             return rect_circle_overlap(a, b, c, d, o.pose.position(), o.radius);
           });
    } else {
      mark(o.pose.x - e, o.pose.y - e, o.pose.x + e, o.pose.y + e,
           [&](double a, double b, double c, double d) {
             return rect_obb_overlap(a, b, c, d, o.pose, 0.5 * o.width, 0.5 * o.height);
           });
    }
  }
  return g;
}

// Occupied set dilated by a disc of the given radius (meters).
inline OccupancyGrid inflate(const OccupancyGrid& g, double radius) {
  OccupancyGrid out = g;
  if (radius <= 0.0) return out;
  int r = static_cast<int>(std::ceil(radius / g.resolution));
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if (dx * dx + dy * dy <= static_cast<double>(r) * r) offsets.emplace_back(dx, dy);
  for (int iy = 0; iy < g.height; ++iy)
    for (int ix = 0; ix < g.width; ++ix) {
      if (!g.occupied(ix, iy)) continue;
      for (auto [dx, dy] : offsets) {
        int nx = ix + dx, ny = iy + dy;
        if (g.in_bounds(nx, ny)) out.set(nx, ny, true);
      }
    }
  return out;
}

// 4-connected flood fill from one free cell; returns component labels
// (-1 occupied, otherwise component id).
inline std::vector<int> free_components(const OccupancyGrid& g) {
  std::vector<int> label(g.cells.size(), -1);
  std::vector<int> stack;
  int next = 0;
  for (size_t start = 0; start < g.cells.size(); ++start) {
    if (g.cells[start] || label[start] >= 0) continue;
    int id = next++;
    stack.push_back(static_cast<int>(start));
    label[start] = id;
    while (!stack.empty()) {
      int cur = stack.back();
      stack.pop_back();
      int ix = cur % g.width, iy = cur / g.width;
      const int nbr[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      for (auto& n : nbr) {
        int nx = ix + n[0], ny = iy + n[1];
        if (!g.in_bounds(nx, ny)) continue;
        int ni = g.idx(nx, ny);
        if (g.cells[ni] || label[ni] >= 0) continue;
        label[ni] = id;
        stack.push_back(ni);
      }
    }
  }
  return label;
}

inline bool free_space_connected(const OccupancyGrid& g) {
  auto label = free_components(g);
  int max_id = -1;
  for (int l : label) max_id = std::max(max_id, l);
  return max_id <= 0;
}

// ---- maze generation ----
//
// Walls live on a coarse lattice of 2 m cells: each cell interior is 3 blocks
// wide, separating wall lines are one block. A depth-first spanning tree over
// the lattice is carved first (so free space stays connected), then wall
// segments are deleted uniformly at random down to the requested density.
namespace detail {

struct MazeLattice {
  static constexpr int kCells = 10;       // per axis
  static constexpr int kCellBlocks = 3;   // interior blocks per cell
  static constexpr int kPitch = 4;        // blocks per lattice step

  // Wall segment between cell (a,b) and its +x or +y neighbor.
  struct Segment {
    int a, b;
    bool vertical;  // true: wall line at x index 4a+3 (between (a,b) and (a+1,b))
  };

  static std::vector<Segment> all_segments() {
    std::vector<Segment> segs;
    for (int a = 0; a < kCells - 1; ++a)
      for (int b = 0; b < kCells; ++b) segs.push_back({a, b, true});
    for (int a = 0; a < kCells; ++a)
      for (int b = 0; b < kCells - 1; ++b) segs.push_back({a, b, false});
    return segs;
  }
};

inline void carve_spanning_tree(Rng& rng, std::set<std::pair<int, int>>& open_edges) {
  constexpr int C = MazeLattice::kCells;
  auto cid = [](int a, int b) { return b * C + a; };
  std::vector<bool> visited(C * C, false);
  std::vector<int> stack;
  stack.push_back(cid(0, 0));
  visited[cid(0, 0)] = true;
  while (!stack.empty()) {
    int cur = stack.back();
    int a = cur % C, b = cur / C;
    int order[4] = {0, 1, 2, 3};
    // deterministic shuffle
    for (int i = 3; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
    const int d[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    bool advanced = false;
    for (int k = 0; k < 4 && !advanced; ++k) {
      int na = a + d[order[k]][0], nb = b + d[order[k]][1];
      if (na < 0 || nb < 0 || na >= C || nb >= C) continue;
      if (visited[cid(na, nb)]) continue;
      visited[cid(na, nb)] = true;
      open_edges.insert({std::min(cur, cid(na, nb)), std::max(cur, cid(na, nb))});
      stack.push_back(cid(na, nb));
      advanced = true;
    }
    if (!advanced) stack.pop_back();
  }
}

}  // namespace detail

inline WorldSpec generate_maze(uint64_t seed, double wall_density) {
  if (wall_density < 0.0 || wall_density > 0.5)
    throw Error("generate_maze: wall_density must be in [0, 0.5]");
  using L = detail::MazeLattice;
  constexpr int C = L::kCells;

  WorldSpec world;
  world.seed = seed;

  Rng rng(mix_seed({seed, 0x6d617a65ull}));
  std::set<std::pair<int, int>> open_edges;
  detail::carve_spanning_tree(rng, open_edges);

  auto cid = [](int a, int b) { return b * C + a; };
  std::vector<L::Segment> closed;
  for (const auto& s : L::all_segments()) {
    int u = cid(s.a, s.b);
    int v = s.vertical ? cid(s.a + 1, s.b) : cid(s.a, s.b + 1);
    if (!open_edges.count({std::min(u, v), std::max(u, v)})) closed.push_back(s);
  }

  const size_t total_slots = 2 * C * (C - 1);
  size_t want = static_cast<size_t>(std::llround(wall_density * total_slots));
  want = std::min(want, closed.size());
  // keep a uniform subset of the spanning tree's closed walls
  for (size_t i = closed.size() - 1; i > 0; --i)
    std::swap(closed[i], closed[rng.index(i + 1)]);
  closed.resize(want);

  std::set<std::pair<int, int>> blocks;  // block indices on the fine grid
  auto add_block = [&](int bx, int by) { blocks.insert({bx, by}); };
  for (const auto& s : closed) {
    if (s.vertical) {
      int bx = L::kPitch * s.a + 3;
      for (int k = 0; k < L::kCellBlocks; ++k) add_block(bx, L::kPitch * s.b + k);
    } else {
      int by = L::kPitch * s.b + 3;
      for (int k = 0; k < L::kCellBlocks; ++k) add_block(L::kPitch * s.a + k, by);
    }
  }
  // corner posts: filled when any incident wall segment is present
  auto has_seg = [&](const L::Segment& s) {
    if (s.a < 0 || s.b < 0) return false;
    if (s.vertical && (s.a >= C - 1 || s.b >= C)) return false;
    if (!s.vertical && (s.a >= C || s.b >= C - 1)) return false;
    for (const auto& c : closed)
      if (c.a == s.a && c.b == s.b && c.vertical == s.vertical) return true;
    return false;
  };
  for (int k = 0; k < C - 1; ++k)
    for (int m = 0; m < C - 1; ++m) {
      if (has_seg({k, m, true}) || has_seg({k, m + 1, true}) ||
          has_seg({k, m, false}) || has_seg({k + 1, m, false}))
        add_block(L::kPitch * k + 3, L::kPitch * m + 3);
    }

  for (auto [bx, by] : blocks)
    world.walls.push_back({{kWallSide * (bx + 0.5), kWallSide * (by + 0.5)}});
  return world;
}

// ---- analogue environments ----

// Open arena with radial wall spokes.
inline WorldSpec generate_sector(uint64_t seed, int n_spokes = 8) {
  WorldSpec world;
  world.seed = seed;
  Rng rng(mix_seed({seed, 0x736563746f72ull}));
  Vec2 c{world.room_w / 2.0, world.room_h / 2.0};
  std::set<std::pair<int, int>> blocks;
  for (int s = 0; s < n_spokes; ++s) {
    double angle = 2.0 * kPi * s / n_spokes + rng.uniform(-0.15, 0.15);
    double r0 = 2.5 + rng.uniform(0.0, 1.0);
    double r1 = r0 + 4.0 + rng.uniform(0.0, 3.0);
    for (double r = r0; r <= r1; r += 0.25) {
      int bx = static_cast<int>(std::floor((c.x + r * std::cos(angle)) / kWallSide));
      int by = static_cast<int>(std::floor((c.y + r * std::sin(angle)) / kWallSide));
      if (bx >= 1 && by >= 1 && bx < 39 && by < 39) blocks.insert({bx, by});
    }
  }
  for (auto [bx, by] : blocks)
    world.walls.push_back({{kWallSide * (bx + 0.5), kWallSide * (by + 0.5)}});
  return world;
}

// Large room with scattered multi-block rectangular structures.
inline WorldSpec generate_campus(uint64_t seed, int n_buildings = 10) {
  WorldSpec world;
  world.room_w = world.room_h = 30.0;
  world.seed = seed;
  Rng rng(mix_seed({seed, 0x63616d707573ull}));
  std::set<std::pair<int, int>> blocks;
  int nb = static_cast<int>(world.room_w / kWallSide);
  for (int i = 0; i < n_buildings; ++i) {
    for (int tries = 0; tries < 50; ++tries) {
      int w = static_cast<int>(rng.uniform_int(3, 8));
      int h = static_cast<int>(rng.uniform_int(3, 8));
      int x0 = static_cast<int>(rng.uniform_int(2, nb - 2 - w));
      int y0 = static_cast<int>(rng.uniform_int(2, nb - 2 - h));
      // keep 2-block (1 m) clearance between buildings so alleys stay passable
      bool clear = true;
      for (int x = x0 - 3; x <= x0 + w + 2 && clear; ++x)
        for (int y = y0 - 3; y <= y0 + h + 2 && clear; ++y)
          if (blocks.count({x, y})) clear = false;
      if (!clear) continue;
      for (int x = x0; x < x0 + w; ++x)
        for (int y = y0; y < y0 + h; ++y) blocks.insert({x, y});
      break;
    }
  }
  for (auto [bx, by] : blocks)
    world.walls.push_back({{kWallSide * (bx + 0.5), kWallSide * (by + 0.5)}});
  return world;
}

// Corridor-and-room grid: rooms along a central corridor cross, with door gaps.
inline WorldSpec generate_office(uint64_t seed) {
  WorldSpec world;
  world.room_w = world.room_h = 30.0;
  world.seed = seed;
  Rng rng(mix_seed({seed, 0x6f6666696365ull}));
  int nb = static_cast<int>(world.room_w / kWallSide);  // 60
  std::set<std::pair<int, int>> blocks;

  // room partition walls every 10 blocks (5 m), skipping the central corridor
  int corridor_lo = nb / 2 - 3, corridor_hi = nb / 2 + 2;  // 3 m corridor
  for (int line = 10; line < nb; line += 10) {
    if (line >= corridor_lo && line <= corridor_hi) continue;
    for (int k = 0; k < nb; ++k) {
      if (k >= corridor_lo && k <= corridor_hi) continue;
      blocks.insert({line, k});
      blocks.insert({k, line});
    }
  }
  // carve a 2-block (1 m) door in every wall run between crossings
  for (int line = 10; line < nb; line += 10) {
    if (line >= corridor_lo && line <= corridor_hi) continue;
    for (int seg = 0; seg < nb; seg += 10) {
      int door = seg + 3 + static_cast<int>(rng.index(4));
      for (int d = 0; d < 2; ++d) {
        blocks.erase({line, door + d});
        blocks.erase({door + d, line});
      }
    }
  }
  for (auto [bx, by] : blocks)
    world.walls.push_back({{kWallSide * (bx + 0.5), kWallSide * (by + 0.5)}});
  return world;
}

// ---- obstacle placement ----

namespace detail {

// Uniform-grid bins over wall and obstacle indices so placement stays linear
// in the number of candidates.
class PlacementIndex {
 public:
  PlacementIndex(const WorldSpec& world, double cell) : world_(&world), cell_(cell) {
    nx_ = std::max(1, static_cast<int>(std::ceil(world.room_w / cell_)));
    ny_ = std::max(1, static_cast<int>(std::ceil(world.room_h / cell_)));
    wall_bins_.resize(static_cast<size_t>(nx_) * ny_);
    obs_bins_.resize(static_cast<size_t>(nx_) * ny_);
    const double we = 0.5 * kWallSide * 1.4143;
    for (size_t i = 0; i < world.walls.size(); ++i)
      insert(wall_bins_, world.walls[i].center, we, static_cast<int>(i));
    for (size_t i = 0; i < world.obstacles.size(); ++i)
      insert(obs_bins_, world.obstacles[i].pose.position(),
             world.obstacles[i].max_extent(), static_cast<int>(i));
  }

  void add_obstacle(const Obstacle& o, int id) {
    insert(obs_bins_, o.pose.position(), o.max_extent(), id);
  }

  bool overlaps_wall(const Obstacle& cand) const {
    bool hit = false;
    visit(wall_bins_, cand.pose.position(), cand.max_extent(), [&](int i) {
      if (!hit && obstacle_overlaps_wall(cand, world_->walls[i])) hit = true;
    });
    return hit;
  }

  bool overlaps_obstacle(const Obstacle& cand, const std::vector<Obstacle>& obstacles) const {
    bool hit = false;
    visit(obs_bins_, cand.pose.position(), cand.max_extent(), [&](int i) {
      if (!hit && obstacles_overlap(cand, obstacles[i])) hit = true;
    });
    return hit;
  }

  // any obstacle center strictly within `radius` of p, with a per-pair
  // predicate deciding the effective radius (radius must be <= bin cell size)
  template <typename F>
  bool center_within(const Vec2& p, double radius, const std::vector<Obstacle>& obstacles,
                     F&& required) const {
    bool hit = false;
    visit(obs_bins_, p, radius, [&](int i) {
      if (hit) return;
      double d = (obstacles[i].pose.position() - p).norm();
      if (d < required(obstacles[i])) hit = true;
    });
    return hit;
  }

 private:
  template <typename F>
  void visit(const std::vector<std::vector<int>>& bins, const Vec2& p, double extent,
             F&& f) const {
    int x0 = std::clamp(static_cast<int>((p.x - extent) / cell_), 0, nx_ - 1);
    int x1 = std::clamp(static_cast<int>((p.x + extent) / cell_), 0, nx_ - 1);
    int y0 = std::clamp(static_cast<int>((p.y - extent) / cell_), 0, ny_ - 1);
    int y1 = std::clamp(static_cast<int>((p.y + extent) / cell_), 0, ny_ - 1);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        for (int id : bins[y * nx_ + x]) f(id);
  }

  void insert(std::vector<std::vector<int>>& bins, const Vec2& c, double extent, int id) {
    int x0 = std::clamp(static_cast<int>((c.x - extent) / cell_), 0, nx_ - 1);
    int x1 = std::clamp(static_cast<int>((c.x + extent) / cell_), 0, nx_ - 1);
    int y0 = std::clamp(static_cast<int>((c.y - extent) / cell_), 0, ny_ - 1);
    int y1 = std::clamp(static_cast<int>((c.y + extent) / cell_), 0, ny_ - 1);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) bins[y * nx_ + x].push_back(id);
  }

  const WorldSpec* world_;
  double cell_;
  int nx_ = 0, ny_ = 0;
  std::vector<std::vector<int>> wall_bins_, obs_bins_;
};

inline bool in_room(const WorldSpec& world, const Obstacle& cand) {
  double e = cand.max_extent();
  return cand.pose.x - e >= 0 && cand.pose.y - e >= 0 &&
         cand.pose.x + e <= world.room_w && cand.pose.y + e <= world.room_h;
}

inline int region_index(double v) {
  // ties on a region edge go to the lower-index region
  int i = static_cast<int>(std::ceil(v / kRegionSize)) - 1;
  return std::clamp(i, 0, 4);
}

}  // namespace detail

inline double local_density(const WorldSpec& world, const Vec2& position) {
  return world.density.grid[detail::region_index(position.x)]
                           [detail::region_index(position.y)];
}

// Rejection sampling to saturation: a fixed attempt budget scaled to the room
// area; pairwise center spacing must be at least `spacing`.
inline WorldSpec place_obstacles_uniform(WorldSpec world, double spacing, uint64_t seed) {
  Rng rng(mix_seed({seed, 0x756e69666f726dull}));
  const double radius = 0.15;  // training cylinders
  const int attempts = static_cast<int>(3.0 * world.room_w * world.room_h);
  detail::PlacementIndex index(world, 1.5);
  for (int i = 0; i < attempts; ++i) {
    Obstacle cand = make_cylinder(radius, rng.uniform(radius, world.room_w - radius),
                                  rng.uniform(radius, world.room_h - radius));
    if (index.overlaps_wall(cand)) continue;
    if (index.center_within(cand.pose.position(), spacing, world.obstacles,
                            [&](const Obstacle&) { return spacing; }))
      continue;
    index.add_obstacle(cand, static_cast<int>(world.obstacles.size()));
    world.obstacles.push_back(cand);
  }
  world.density = DensityField::uniform(spacing);
  return world;
}

// Per-region spacing; a cross-region pair is constrained by the smaller of the
// two region spacings.
inline WorldSpec place_obstacles_nonuniform(WorldSpec world, const DensityField& field,
                                            uint64_t seed) {
  Rng rng(mix_seed({seed, 0x6e6f6e756e69ull}));
  const double radius = 0.15;
  const int attempts = static_cast<int>(3.0 * world.room_w * world.room_h);
  auto spacing_at = [&](const Vec2& p) {
    return field.grid[detail::region_index(p.x)][detail::region_index(p.y)];
  };
  detail::PlacementIndex index(world, 1.5);
  for (int i = 0; i < attempts; ++i) {
    Obstacle cand = make_cylinder(radius, rng.uniform(radius, world.room_w - radius),
                                  rng.uniform(radius, world.room_h - radius));
    if (index.overlaps_wall(cand)) continue;
    double s_cand = spacing_at(cand.pose.position());
    if (index.center_within(cand.pose.position(), 1.5, world.obstacles,
                            [&](const Obstacle& o) {
                              return std::min(s_cand, spacing_at(o.pose.position()));
                            }))
      continue;
    index.add_obstacle(cand, static_cast<int>(world.obstacles.size()));
    world.obstacles.push_back(cand);
  }
  world.density = field;
  return world;
}

namespace detail {

inline Obstacle sample_shape(const std::vector<Obstacle>& shape_set, Rng& rng,
                             const WorldSpec& world) {
  Obstacle o = shape_set[rng.index(shape_set.size())];
  double e = o.max_extent();
  o.pose.x = rng.uniform(e, world.room_w - e);
  o.pose.y = rng.uniform(e, world.room_h - e);
  o.pose.theta = o.shape == Obstacle::Shape::box ? rng.uniform(0.0, kPi / 2.0) : 0.0;
  return o;
}

// spacing estimate for a region from nearest-neighbor distances, snapped to
// the discrete spacing set
inline DensityField estimate_density(const WorldSpec& world) {
  DensityField f;
  for (int ix = 0; ix < 5; ++ix)
    for (int iy = 0; iy < 5; ++iy) {
      std::vector<double> nn;
      for (const auto& o : world.obstacles) {
        if (region_index(o.pose.x) != ix || region_index(o.pose.y) != iy) continue;
        double best = kInf;
        for (const auto& p : world.obstacles) {
          if (&p == &o) continue;
          best = std::min(best, (p.pose.position() - o.pose.position()).norm());
        }
        if (best < kInf) nn.push_back(best);
      }
      double est = 1.5;
      if (nn.size() >= 2) {
        std::nth_element(nn.begin(), nn.begin() + nn.size() / 2, nn.end());
        double med = nn[nn.size() / 2];
        double best_d = kInf;
        for (double s : kSpacings)
          if (std::abs(s - med) < best_d) {
            best_d = std::abs(s - med);
            est = s;
          }
      }
      f.grid[ix][iy] = est;
    }
  return f;
}

}  // namespace detail

// Exactly `count` non-overlapping obstacles; free space of the result must
// stay connected (checked on a rasterized grid, whole placement retried on
// failure).
inline WorldSpec place_obstacles_by_count(const WorldSpec& world, int count,
                                          const std::vector<Obstacle>& shape_set,
                                          uint64_t seed) {
  if (count < 0) throw Error("place_obstacles_by_count: negative count");
  if (count == 0) return world;
  if (shape_set.empty()) throw Error("place_obstacles_by_count: empty shape set");

  for (int round = 0; round < 10; ++round) {
    Rng rng(mix_seed({seed, 0x636f756e74ull, static_cast<uint64_t>(round)}));
    WorldSpec out = world;
    out.obstacles.reserve(world.obstacles.size() + count);
    detail::PlacementIndex index(out, 1.0);
    int budget = 10 * count;
    int placed = 0;
    while (placed < count && budget > 0) {
      --budget;
      Obstacle cand = detail::sample_shape(shape_set, rng, out);
      if (!detail::in_room(out, cand) || index.overlaps_wall(cand) ||
          index.overlaps_obstacle(cand, out.obstacles))
        continue;
      index.add_obstacle(cand, static_cast<int>(out.obstacles.size()));
      out.obstacles.push_back(cand);
      ++placed;
    }
    if (placed < count) continue;
    if (!free_space_connected(rasterize(out, 0.1))) continue;
    out.density = detail::estimate_density(out);
    return out;
  }
  throw PlacementInfeasible("place_obstacles_by_count: could not place " +
                            std::to_string(count) + " obstacles");
}

inline const std::vector<Obstacle>& eval_shape_set() {
  static const std::vector<Obstacle> shapes = {
      make_box(0.3, 0.3, 0, 0, 0), make_box(0.15, 0.15, 0, 0, 0),
      make_cylinder(0.15, 0, 0), make_cylinder(0.05, 0, 0)};
  return shapes;
}

// ---- start/goal sampling ----

inline std::pair<Pose, Pose> sample_start_goal(const WorldSpec& world, uint64_t seed,
                                               double min_separation,
                                               double robot_radius = kDefaultRobotRadius) {
  Rng rng(mix_seed({seed, 0x7374617274ull}));
  OccupancyGrid grid = inflate(rasterize(world, 0.1), robot_radius);
  std::vector<int> comp = free_components(grid);

  auto sample_pose = [&]() -> std::optional<std::pair<Pose, int>> {
    double x = rng.uniform(robot_radius, world.room_w - robot_radius);
    double y = rng.uniform(robot_radius, world.room_h - robot_radius);
    double theta = rng.uniform(-kPi, kPi);
    if (world_clearance(world, {x, y}) < robot_radius) return std::nullopt;
    int c = comp[grid.idx(grid.cell_x(x), grid.cell_y(y))];
    if (c < 0) return std::nullopt;
    return std::make_pair(Pose{x, y, theta}, c);
  };

  for (int tries = 0; tries < 4000; ++tries) {
    auto a = sample_pose();
    if (!a) continue;
    auto b = sample_pose();
    if (!b) continue;
    if (a->second != b->second) continue;
    if ((a->first.position() - b->first.position()).norm() < min_separation) continue;
    return {a->first, b->first};
  }
  throw NoValidPair("sample_start_goal: no valid start/goal pair found");
}

}  // namespace navlab
