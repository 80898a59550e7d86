#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "navlab/geometry.hpp"
#include "navlab/global_planner.hpp"
#include "navlab/sensing.hpp"

namespace navlab {

// Tunable navigation parameters. d_la and f_gp are the primary pair; the
// remaining five govern trajectory selection and feasibility checking.
struct NavParams {
  double d_la = 3.0;                         // look-ahead distance (m)
  double f_gp = 1.0;                         // global replanning frequency (Hz)
  double selection_cost_hysteresis = 0.9;    // keep current unless challenger beats this factor
  double switching_blocking_period = 2.0;    // min seconds between homotopy switches
  double selection_prefers_initial_plan = 0.95;  // score multiplier right after a replan
  double inflation_distance = 0.1;           // extra clearance margin (m)
  int feasibility_check_poses = 4;           // leading poses validated per candidate

  bool operator==(const NavParams& o) const {
    return d_la == o.d_la && f_gp == o.f_gp &&
           selection_cost_hysteresis == o.selection_cost_hysteresis &&
           switching_blocking_period == o.switching_blocking_period &&
           selection_prefers_initial_plan == o.selection_prefers_initial_plan &&
           inflation_distance == o.inflation_distance &&
           feasibility_check_poses == o.feasibility_check_poses;
  }
};

struct RobotLimits {
  double v_max = 0.5;  // m/s
  double w_max = 1.5;  // rad/s
};

// Angular opening between sensed obstacles, robot frame.
struct Gap {
  double theta_lo = 0.0;
  double theta_hi = 0.0;      // theta_lo < theta_hi (may exceed 2*pi when wrapping)
  double range_lo = 0.0;      // range of the obstacle bounding the low edge
  double range_hi = 0.0;
  Vec2 target;                // robot frame point the candidate routes through

  double width() const { return theta_hi - theta_lo; }
};

struct TrajPose {
  double t = 0.0;
  Pose pose;
};

struct Trajectory {
  std::vector<TrajPose> poses;
  double score = kInf;
  int gap_id = -1;             // -1: direct-to-goal candidate
  Vec2 target_world;           // homotopy anchor for selection memory
  double initial_heading = 0.0;
};

// ---- gap detection ----

// Maximal free angular runs of the egocircle under the d_la cutoff. A run is
// kept only if the opening between its bounding obstacles admits the inflated
// robot. Measurements beyond d_la never influence the result.
inline std::vector<Gap> detect_gaps(const Egocircle& ego, double d_la,
                                    double robot_radius, double inflation) {
  const int n = ego.n_bins();
  const double bin_w = 2.0 * kPi / n;
  const double need = 2.0 * (robot_radius + inflation);

  std::vector<double> range(n, kInf);
  bool any_blocked = false;
  for (int b = 0; b < n; ++b) {
    double r = ego.min_range(b);
    if (r <= d_la) {
      range[b] = r;
      any_blocked = true;
    }
  }

  std::vector<Gap> gaps;
  if (!any_blocked) {
    Gap g;
    g.theta_lo = 0.0;
    g.theta_hi = 2.0 * kPi;
    g.range_lo = g.range_hi = d_la;
    g.target = polar(0.0, d_la);
    gaps.push_back(g);
    return gaps;
  }

  auto blocked = [&](int b) { return range[(b % n + n) % n] < kInf; };
  for (int b = 0; b < n; ++b) {
    if (blocked(b) || !blocked(b - 1)) continue;  // b starts a free run
    int len = 0;
    while (len < n && !blocked(b + len)) ++len;
    int lo_bin = (b - 1 + n) % n;      // blocked neighbors
    int hi_bin = (b + len) % n;
    double r_lo = range[lo_bin];
    double r_hi = range[hi_bin];
    Vec2 p_lo = polar((lo_bin + 0.5) * bin_w, r_lo);
    Vec2 p_hi = polar((hi_bin + 0.5) * bin_w, r_hi);
    double opening = (p_hi - p_lo).norm();
    double width = len * bin_w;
    if (width < kPi && opening < need) continue;  // not passable

    Gap g;
    g.theta_lo = b * bin_w;
    g.theta_hi = (b + len) * bin_w;  // may wrap past 2*pi
    g.range_lo = r_lo;
    g.range_hi = r_hi;
    double mid = 0.5 * (g.theta_lo + g.theta_hi);
    double depth = std::min(d_la, 0.5 * (r_lo + r_hi));
    g.target = polar(mid, std::max(depth, 0.5 * d_la));
    gaps.push_back(g);
  }
  return gaps;
}

// ---- local goal ----

// Farthest point on the global path within d_la of the robot, walking forward
// from the nearest point; the path end when it never leaves the disc.
inline Pose local_goal(const GlobalPath& path, const Pose& pose, double d_la) {
  if (path.waypoints.empty()) throw Error("local_goal: empty path");
  const auto& w = path.waypoints;
  Vec2 rp = pose.position();
  if (w.size() == 1) return {w[0].x, w[0].y, pose.theta};

  // nearest point parameter (segment index, fraction)
  size_t best_seg = 0;
  double best_t = 0.0, best_d = kInf;
  for (size_t i = 1; i < w.size(); ++i) {
    Vec2 ab = w[i] - w[i - 1];
    double len_sq = ab.norm_sq();
    double t = len_sq > 0 ? std::clamp((rp - w[i - 1]).dot(ab) / len_sq, 0.0, 1.0) : 0.0;
    double d = (rp - (w[i - 1] + ab * t)).norm();
    if (d < best_d) {
      best_d = d;
      best_seg = i - 1;
      best_t = t;
    }
  }

  Vec2 prev = w[best_seg] + (w[best_seg + 1] - w[best_seg]) * best_t;
  for (size_t i = best_seg + 1; i < w.size(); ++i) {
    Vec2 next = w[i];
    if ((next - rp).norm() > d_la) {
      // first exit: intersect segment prev->next with the d_la circle
      Vec2 d = next - prev;
      double a = d.norm_sq();
      double b = 2.0 * (prev - rp).dot(d);
      double c = (prev - rp).norm_sq() - d_la * d_la;
      double disc = b * b - 4 * a * c;
      double t = 1.0;
      if (disc >= 0 && a > 0) {
        t = std::clamp((-b + std::sqrt(disc)) / (2 * a), 0.0, 1.0);
      }
      Vec2 hit = prev + d * t;
      double heading = std::atan2(d.y, d.x);
      return {hit.x, hit.y, heading};
    }
    prev = next;
  }
  Vec2 end = w.back();
  Vec2 dir = w.back() - w[w.size() - 2];
  return {end.x, end.y, std::atan2(dir.y, dir.x)};
}

// ---- candidate trajectories ----

namespace detail {

inline double clearance_at(const Vec2& p, const std::vector<Vec2>& obstacle_pts) {
  double best = kInf;
  for (const auto& o : obstacle_pts) best = std::min(best, (p - o).norm());
  return best;
}

inline Trajectory trace_polyline(const std::vector<Vec2>& pts, const Pose& pose,
                                 double d_la, double v_nom) {
  Trajectory traj;
  const double step = 0.15;
  Vec2 rp = pose.position();
  double t = 0.0;
  for (size_t i = 1; i < pts.size(); ++i) {
    Vec2 a = pts[i - 1], b = pts[i];
    double seg = (b - a).norm();
    if (seg < 1e-9) continue;
    double heading = std::atan2(b.y - a.y, b.x - a.x);
    int n = std::max(1, static_cast<int>(std::ceil(seg / step)));
    for (int k = 1; k <= n; ++k) {
      Vec2 p = a + (b - a) * (static_cast<double>(k) / n);
      if ((p - rp).norm() > d_la) return traj;  // horizon stays within d_la
      t += seg / n / v_nom;
      traj.poses.push_back({t, {p.x, p.y, heading}});
    }
  }
  return traj;
}

}  // namespace detail

// One candidate per gap (through the gap target, then toward the local goal)
// plus a direct candidate when the straight line to the local goal is clear.
// Score: path length + penetration penalty + weighted terminal goal distance.
inline std::vector<Trajectory> plan_candidates(const std::vector<Gap>& gaps,
                                               const Pose& lgoal, const Pose& pose,
                                               const NavParams& params,
                                               const std::vector<Vec2>& obstacle_pts_world,
                                               double robot_radius,
                                               const RobotLimits& limits = {}) {
  constexpr double w_obs = 1.0;
  constexpr double w_goal = 2.0;
  const double margin = robot_radius + params.inflation_distance;
  Vec2 rp = pose.position();
  Vec2 gp = lgoal.position();

  auto finish = [&](Trajectory traj, int gap_id, const Vec2& target_world) {
    traj.gap_id = gap_id;
    traj.target_world = target_world;
    if (!traj.poses.empty()) {
      Vec2 first = traj.poses.front().pose.position();
      traj.initial_heading = std::atan2(first.y - rp.y, first.x - rp.x);
    }
    double length = 0.0;
    Vec2 prev = rp;
    double penet = 0.0;
    for (const auto& tp : traj.poses) {
      Vec2 p = tp.pose.position();
      length += (p - prev).norm();
      prev = p;
      double c = detail::clearance_at(p, obstacle_pts_world);
      if (c < margin) penet += margin - c;
    }
    double terminal = traj.poses.empty() ? (gp - rp).norm()
                                         : (gp - traj.poses.back().pose.position()).norm();
    traj.score = length + w_obs * penet + w_goal * terminal;
    return traj;
  };

  std::vector<Trajectory> out;

  // direct candidate when the straight segment keeps the inflated clearance
  bool direct_ok = true;
  {
    double len = (gp - rp).norm();
    int n = std::max(1, static_cast<int>(std::ceil(len / 0.1)));
    for (int k = 0; k <= n && direct_ok; ++k) {
      Vec2 p = rp + (gp - rp) * (static_cast<double>(k) / n);
      if (detail::clearance_at(p, obstacle_pts_world) < margin) direct_ok = false;
    }
  }

  for (size_t i = 0; i < gaps.size(); ++i) {
    Vec2 target_world = Transform2::from_pose(pose).apply(gaps[i].target);
    Trajectory traj = detail::trace_polyline({rp, target_world, gp}, pose,
                                             params.d_la, limits.v_max);
    out.push_back(finish(std::move(traj), static_cast<int>(i), target_world));
  }
  if (direct_ok) {
    Trajectory traj = detail::trace_polyline({rp, gp}, pose, params.d_la, limits.v_max);
    out.push_back(finish(std::move(traj), -1, gp));
  }
  return out;
}

// ---- feasibility ----

// Leading poses of the trajectory must keep the inflated clearance against the
// egocircle. Only measurements within d_la are considered.
inline bool feasibility_check(const Trajectory& traj, const Egocircle& ego,
                              const Pose& robot_pose, double d_la, double robot_radius,
                              double inflation, int n_poses) {
  if (n_poses < 1) throw Error("feasibility_check: n_poses must be >= 1");
  auto pts_robot = ego.obstacle_points(d_la);
  if (pts_robot.empty()) return true;
  Transform2 tf = Transform2::from_pose(robot_pose);
  std::vector<Vec2> pts;
  pts.reserve(pts_robot.size());
  for (const auto& p : pts_robot) pts.push_back(tf.apply(p));
  const double margin = robot_radius + inflation;
  int checked = 0;
  for (const auto& tp : traj.poses) {
    if (checked++ >= n_poses) break;
    if (detail::clearance_at(tp.pose.position(), pts) < margin) return false;
  }
  return true;
}

// ---- selection ----

struct SelectionState {
  std::optional<Trajectory> previous;
  double last_switch_time = -kInf;
  bool fresh_global_plan = false;  // set right after a replan, cleared by select
  double plan_initial_heading = 0.0;
};

// Argmin over candidate scores, biased toward the previous homotopy
// (hysteresis and switching blocking) and, on the first cycle after a replan,
// toward the candidate matching the new global path's initial heading.
inline int select(const std::vector<Trajectory>& candidates, SelectionState& state,
                  const NavParams& params, double sim_time) {
  if (candidates.empty()) throw Error("select: no candidates");

  std::vector<double> score(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) score[i] = candidates[i].score;

  if (state.fresh_global_plan && params.selection_prefers_initial_plan != 1.0) {
    size_t match = 0;
    double best = kInf;
    for (size_t i = 0; i < candidates.size(); ++i) {
      double d = std::abs(wrap_angle(candidates[i].initial_heading -
                                     state.plan_initial_heading));
      if (d < best) {
        best = d;
        match = i;
      }
    }
    score[match] *= params.selection_prefers_initial_plan;
  }
  state.fresh_global_plan = false;

  size_t best_i = 0;
  for (size_t i = 1; i < candidates.size(); ++i)
    if (score[i] < score[best_i]) best_i = i;

  int chosen = static_cast<int>(best_i);
  if (state.previous) {
    // candidate continuing the previous homotopy: nearest target point
    int match = 0;
    double best_d = kInf;
    for (size_t i = 0; i < candidates.size(); ++i) {
      double d = (candidates[i].target_world - state.previous->target_world).norm();
      if (candidates[i].gap_id == -1 && state.previous->gap_id == -1) d = 0.0;
      if (d < best_d) {
        best_d = d;
        match = static_cast<int>(i);
      }
    }
    if (match != static_cast<int>(best_i)) {
      bool blocked = sim_time - state.last_switch_time < params.switching_blocking_period;
      bool challenger_wins =
          score[best_i] < params.selection_cost_hysteresis * score[match];
      chosen = (blocked || !challenger_wins) ? match : static_cast<int>(best_i);
    }
    if (chosen != match) state.last_switch_time = sim_time;
  }
  state.previous = candidates[chosen];
  return chosen;
}

// ---- velocity command ----

// Pure pursuit on the leading segment; rotate in place when the target is
// behind the robot.
inline std::pair<double, double> velocity_command(const Trajectory& traj,
                                                  const Pose& pose,
                                                  const RobotLimits& limits) {
  if (traj.poses.empty()) return {0.0, 0.0};
  Vec2 rp = pose.position();
  const double lookahead = 0.3;
  Vec2 target = traj.poses.back().pose.position();
  for (const auto& tp : traj.poses) {
    if ((tp.pose.position() - rp).norm() >= lookahead) {
      target = tp.pose.position();
      break;
    }
  }
  double dist = (target - rp).norm();
  if (dist < 1e-9) return {0.0, 0.0};
  double alpha = wrap_angle(std::atan2(target.y - rp.y, target.x - rp.x) - pose.theta);
  if (std::abs(alpha) > kPi / 2.0) return {0.0, alpha > 0 ? limits.w_max : -limits.w_max};
  double curvature = 2.0 * std::sin(alpha) / dist;
  double v = limits.v_max;
  double w = v * curvature;
  if (std::abs(w) > limits.w_max) {
    v *= limits.w_max / std::abs(w);
    w = w > 0 ? limits.w_max : -limits.w_max;
  }
  return {v, w};
}

}  // namespace navlab
