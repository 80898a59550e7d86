#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace navlab {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double norm_sq() const { return x * x + y * y; }
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 position() const { return {x, y}; }
  bool operator==(const Pose& o) const {
    return x == o.x && y == o.y && theta == o.theta;
  }
};

// wrap to (-pi, pi]
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

// wrap to [0, 2*pi)
inline double wrap_angle_2pi(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a < 0) a += 2.0 * kPi;
  return a;
}

inline Vec2 polar(double angle, double range) {
  return {range * std::cos(angle), range * std::sin(angle)};
}

// Planar rigid transform: p_out = R(theta) * p_in + t.
struct Transform2 {
  double c = 1.0, s = 0.0;  // cos/sin of rotation
  double tx = 0.0, ty = 0.0;

  static Transform2 from(double dx, double dy, double dtheta) {
    return {std::cos(dtheta), std::sin(dtheta), dx, dy};
  }

  static Transform2 from_pose(const Pose& p) { return from(p.x, p.y, p.theta); }

  Vec2 apply(const Vec2& p) const {
    return {c * p.x - s * p.y + tx, s * p.x + c * p.y + ty};
  }

  Transform2 inverse() const {
    // R^T * (p - t)
    return {c, -s, -(c * tx + s * ty), -(-s * tx + c * ty)};
  }
};

// ---- distance helpers ----

inline double dist_point_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  Vec2 ab = b - a;
  double len_sq = ab.norm_sq();
  if (len_sq <= 0.0) return (p - a).norm();
  double t = std::clamp((p - a).dot(ab) / len_sq, 0.0, 1.0);
  return (p - (a + ab * t)).norm();
}

// Axis-aligned box given by center and half extents.
inline double dist_point_aabb(const Vec2& p, const Vec2& center, double hx, double hy) {
  double dx = std::max(std::abs(p.x - center.x) - hx, 0.0);
  double dy = std::max(std::abs(p.y - center.y) - hy, 0.0);
  return std::hypot(dx, dy);
}

// Oriented box: pose gives center and rotation, half extents hx/hy.
inline double dist_point_obb(const Vec2& p, const Pose& pose, double hx, double hy) {
  double c = std::cos(pose.theta), s = std::sin(pose.theta);
  double rx = p.x - pose.x, ry = p.y - pose.y;
  Vec2 local{c * rx + s * ry, -s * rx + c * ry};
  return dist_point_aabb(local, {0, 0}, hx, hy);
}

// ---- overlap tests (closed shapes) ----

inline bool circle_circle_overlap(const Vec2& c0, double r0, const Vec2& c1, double r1) {
  return (c0 - c1).norm_sq() <= (r0 + r1) * (r0 + r1);
}

inline bool circle_obb_overlap(const Vec2& c, double r, const Pose& pose, double hx, double hy) {
  return dist_point_obb(c, pose, hx, hy) <= r;
}

inline bool circle_aabb_overlap(const Vec2& c, double r, const Vec2& center, double hx, double hy) {
  return dist_point_aabb(c, center, hx, hy) <= r;
}

namespace detail {
// Separating-axis test for two convex quads given by corner lists.
inline bool sat_separated(const Vec2* a, const Vec2* b, const Vec2& axis) {
  double amin = kInf, amax = -kInf, bmin = kInf, bmax = -kInf;
  for (int i = 0; i < 4; ++i) {
    double pa = a[i].dot(axis);
    double pb = b[i].dot(axis);
    amin = std::min(amin, pa);
    amax = std::max(amax, pa);
    bmin = std::min(bmin, pb);
    bmax = std::max(bmax, pb);
  }
  return amax < bmin || bmax < amin;
}

inline void obb_corners(const Pose& pose, double hx, double hy, Vec2* out) {
  double c = std::cos(pose.theta), s = std::sin(pose.theta);
  Vec2 ex{c * hx, s * hx}, ey{-s * hy, c * hy};
  Vec2 ctr{pose.x, pose.y};
  out[0] = ctr + ex + ey;
  out[1] = ctr + ex - ey;
  out[2] = ctr - ex - ey;
  out[3] = ctr - ex + ey;
}
}  // namespace detail

inline bool obb_obb_overlap(const Pose& p0, double hx0, double hy0,
                            const Pose& p1, double hx1, double hy1) {
  Vec2 a[4], b[4];
  detail::obb_corners(p0, hx0, hy0, a);
  detail::obb_corners(p1, hx1, hy1, b);
  double c0 = std::cos(p0.theta), s0 = std::sin(p0.theta);
  double c1 = std::cos(p1.theta), s1 = std::sin(p1.theta);
  Vec2 axes[4] = {{c0, s0}, {-s0, c0}, {c1, s1}, {-s1, c1}};
  for (const Vec2& ax : axes) {
    if (detail::sat_separated(a, b, ax)) return false;
  }
  return true;
}

inline bool obb_aabb_overlap(const Pose& p, double hx, double hy,
                             const Vec2& center, double ahx, double ahy) {
  return obb_obb_overlap(p, hx, hy, Pose{center.x, center.y, 0.0}, ahx, ahy);
}

// Cell rectangle [x0,x1]x[y0,y1] against shapes, closed intersection.
inline bool rect_circle_overlap(double x0, double y0, double x1, double y1,
                                const Vec2& c, double r) {
  double dx = std::max({x0 - c.x, 0.0, c.x - x1});
  double dy = std::max({y0 - c.y, 0.0, c.y - y1});
  return dx * dx + dy * dy <= r * r;
}

inline bool rect_obb_overlap(double x0, double y0, double x1, double y1,
                             const Pose& pose, double hx, double hy) {
  Vec2 center{0.5 * (x0 + x1), 0.5 * (y0 + y1)};
  return obb_aabb_overlap(pose, hx, hy, center, 0.5 * (x1 - x0), 0.5 * (y1 - y0));
}

// ---- ray intersections; rays are (origin, unit dir), return smallest t >= 0 ----

inline std::optional<double> ray_circle(const Vec2& o, const Vec2& d,
                                        const Vec2& c, double r) {
  Vec2 oc = o - c;
  double b = oc.dot(d);
  double disc = b * b - (oc.norm_sq() - r * r);
  if (disc < 0.0) return std::nullopt;
  double sq = std::sqrt(disc);
  double t0 = -b - sq;
  if (t0 >= 0.0) return t0;
  double t1 = -b + sq;
  if (t1 >= 0.0) return t1;  // origin inside circle
  return std::nullopt;
}

// Slab test against [cx-hx, cx+hx] x [cy-hy, cy+hy]; returns entry distance
// (0 when the origin is inside).
inline std::optional<double> ray_aabb(const Vec2& o, const Vec2& d,
                                      const Vec2& center, double hx, double hy) {
  double tmin = -kInf, tmax = kInf;
  double lo[2] = {center.x - hx, center.y - hy};
  double hi[2] = {center.x + hx, center.y + hy};
  double op[2] = {o.x, o.y};
  double dp[2] = {d.x, d.y};
  for (int i = 0; i < 2; ++i) {
    if (std::abs(dp[i]) < 1e-15) {
      if (op[i] < lo[i] || op[i] > hi[i]) return std::nullopt;
    } else {
      double t0 = (lo[i] - op[i]) / dp[i];
      double t1 = (hi[i] - op[i]) / dp[i];
      if (t0 > t1) std::swap(t0, t1);
      tmin = std::max(tmin, t0);
      tmax = std::min(tmax, t1);
      if (tmin > tmax) return std::nullopt;
    }
  }
  if (tmax < 0.0) return std::nullopt;
  return std::max(tmin, 0.0);
}

inline std::optional<double> ray_obb(const Vec2& o, const Vec2& d,
                                     const Pose& pose, double hx, double hy) {
  double c = std::cos(pose.theta), s = std::sin(pose.theta);
  double rx = o.x - pose.x, ry = o.y - pose.y;
  Vec2 lo{c * rx + s * ry, -s * rx + c * ry};
  Vec2 ld{c * d.x + s * d.y, -s * d.x + c * d.y};
  return ray_aabb(lo, ld, {0, 0}, hx, hy);
}

// Distance along the ray to the boundary of [0,w]x[0,h], from the inside.
inline double ray_room_exit(const Vec2& o, const Vec2& d, double w, double h) {
  double t = kInf;
  if (d.x > 1e-15) t = std::min(t, (w - o.x) / d.x);
  if (d.x < -1e-15) t = std::min(t, (0.0 - o.x) / d.x);
  if (d.y > 1e-15) t = std::min(t, (h - o.y) / d.y);
  if (d.y < -1e-15) t = std::min(t, (0.0 - o.y) / d.y);
  return std::max(t, 0.0);
}

}  // namespace navlab
