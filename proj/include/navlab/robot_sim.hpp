#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "navlab/errors.hpp"
#include "navlab/geometry.hpp"
#include "navlab/global_planner.hpp"
#include "navlab/local_planner.hpp"
#include "navlab/rewards.hpp"
#include "navlab/sensing.hpp"
#include "navlab/tuner_policy.hpp"
#include "navlab/world.hpp"

namespace navlab {

struct RobotState {
  Pose pose;
  double v = 0.0;
  double w = 0.0;
  double radius = kDefaultRobotRadius;
};

// Exact unicycle integration over one step; commands are clamped to the
// limits before integrating.
inline RobotState step(const RobotState& state, double v_cmd, double w_cmd, double dt,
                       const RobotLimits& limits = {}) {
  if (dt <= 0.0) throw Error("step: dt must be positive");
  double v = std::clamp(v_cmd, -limits.v_max, limits.v_max);
  double w = std::clamp(w_cmd, -limits.w_max, limits.w_max);
  RobotState out = state;
  out.v = v;
  out.w = w;
  double th = state.pose.theta;
  if (std::abs(w) < 1e-9) {
    out.pose.x += v * dt * std::cos(th);
    out.pose.y += v * dt * std::sin(th);
  } else {
    out.pose.x += v / w * (std::sin(th + w * dt) - std::sin(th));
    out.pose.y += v / w * (-std::cos(th + w * dt) + std::cos(th));
    out.pose.theta = wrap_angle(th + w * dt);
  }
  if (std::abs(w) < 1e-9) out.pose.theta = th;
  return out;
}

// Open intersection: a disc exactly grazing a shape boundary does not collide.
inline bool check_collision(const WorldSpec& world, const Pose& pose, double radius) {
  Vec2 p = pose.position();
  if (p.x - radius < 0 || p.y - radius < 0 || p.x + radius > world.room_w ||
      p.y + radius > world.room_h)
    return true;
  return world_clearance(world, p) < radius;
}

struct EpisodeConfig {
  WorldSpec world;
  Pose start, goal;
  double dt = 0.05;
  double control_period = 0.1;
  double tune_period = 2.0;
  double timeout = 300.0;
  double goal_tolerance = 0.3;
  double robot_radius = kDefaultRobotRadius;
  RobotLimits limits;
  NavParams initial_params;
  SensorConfig sensor;
  EgocircleConfig egocircle;
  double plan_resolution = kDefaultResolution;
  uint64_t seed = 0;
};

struct Transition {
  Observation obs;
  std::vector<int> action;
  double reward = 0.0;
  Observation next_obs;
  bool done = false;
};

enum class FailureReason { none, collision, timeout, no_path };

inline std::string to_string(FailureReason r) {
  switch (r) {
    case FailureReason::none: return "none";
    case FailureReason::collision: return "collision";
    case FailureReason::timeout: return "timeout";
    case FailureReason::no_path: return "no_path";
  }
  return "?";
}

struct EpisodeResult {
  bool success = false;
  double path_length = 0.0;   // realized length l
  double sim_runtime = 0.0;   // simulated seconds
  double wall_runtime = 0.0;  // wall-clock seconds, diagnostics only
  FailureReason failure_reason = FailureReason::none;
  double l_min = 0.0;         // oracle shortest-path length
  std::vector<Transition> transitions;
};

// Two-timescale episode loop: physics at dt, sensing/local planning at
// control_period, global replanning at the current f_gp (or on special
// events), parameter retuning every tune_period.
inline EpisodeResult run_episode(const EpisodeConfig& config, const TunerPolicy& tuner) {
  if (config.dt > config.control_period + 1e-12 ||
      config.control_period > config.tune_period + 1e-12)
    throw Error("run_episode: need dt <= control_period <= tune_period");
  // guard against tunneling through the smallest obstacle feature
  if (config.dt * config.limits.v_max >= 0.05)
    throw Error("run_episode: dt * v_max too large for the smallest obstacles");

  auto wall_start = std::chrono::steady_clock::now();

  EpisodeResult result;
  GlobalPath oracle_path =
      shortest_path_oracle(config.world, config.start, config.goal,
                           config.plan_resolution);  // throws NoPath when disconnected
  result.l_min = oracle_path.length;

  // known map starts from the a-priori wall layout only; random obstacles are
  // discovered by sensing
  WorldSpec walls_only = config.world;
  walls_only.obstacles.clear();
  DStarLite planner(rasterize(walls_only, config.plan_resolution),
                    config.goal.position());
  const OccupancyGrid& known = planner.map();
  const int inflate_cells =
      static_cast<int>(std::ceil(config.robot_radius / config.plan_resolution));
  std::vector<std::pair<int, int>> inflate_offsets;
  for (int dy = -inflate_cells; dy <= inflate_cells; ++dy)
    for (int dx = -inflate_cells; dx <= inflate_cells; ++dx)
      if (dx * dx + dy * dy <= inflate_cells * inflate_cells)
        inflate_offsets.emplace_back(dx, dy);

  ShapeIndex shape_index(config.world);
  Egocircle ego(config.egocircle);
  RobotState robot;
  robot.pose = config.start;
  robot.radius = config.robot_radius;
  Pose last_sense_pose = config.start;

  NavParams params = config.initial_params;
  SelectionState selection;
  Rng rng(mix_seed({config.seed, 0x657069736f6465ull}));

  GlobalPath path;
  bool have_path = false;
  double last_plan_time = -kInf;
  double no_path_since = -1.0;

  double v_cmd = 0.0, w_cmd = 0.0;
  double t = 0.0;
  int step_idx = 0;
  const int control_every = std::max(1, static_cast<int>(std::round(config.control_period / config.dt)));
  const int tune_every = std::max(1, static_cast<int>(std::round(config.tune_period / config.dt)));
  if (tune_every % control_every != 0)
    throw Error("run_episode: control_period must divide tune_period");

  Observation obs(config.egocircle.n_bins, 1.0);
  bool have_open = false;
  Transition open;

  auto goal_dist = [&]() {
    return (robot.pose.position() - config.goal.position()).norm();
  };

  bool terminated = false;
  while (!terminated) {
    // -- sensing + planning cadence --
    if (step_idx % control_every == 0) {
      Scan scan = raycast(shape_index, robot.pose, config.sensor);
      // pose delta expressed in the previous robot frame
      double c = std::cos(last_sense_pose.theta), s = std::sin(last_sense_pose.theta);
      Vec2 dw = robot.pose.position() - last_sense_pose.position();
      Transform2 odom = Transform2::from(c * dw.x + s * dw.y, -s * dw.x + c * dw.y,
                                         wrap_angle(robot.pose.theta - last_sense_pose.theta));
      ego.update(scan, odom, config.control_period);
      last_sense_pose = robot.pose;

      // write discovered obstacle points into the known map, inflated
      std::vector<std::pair<std::pair<int, int>, bool>> changed;
      for (size_t i = 0; i < scan.ranges.size(); ++i) {
        if (scan.ranges[i] >= scan.max_range - 1e-9) continue;
        Vec2 dir = polar(robot.pose.theta + scan.angles[i], 1.0);
        Vec2 hit = robot.pose.position() + dir * (scan.ranges[i] + 0.5 * known.resolution);
        int cx = known.cell_x(hit.x), cy = known.cell_y(hit.y);
        if (known.occupied(cx, cy)) continue;  // wall already on the map
        for (auto [dx, dy] : inflate_offsets) {
          int nx = cx + dx, ny = cy + dy;
          if (known.in_bounds(nx, ny) && !known.occupied(nx, ny))
            changed.push_back({{nx, ny}, true});
        }
      }
      if (!changed.empty()) planner.update_cells(changed);

      bool special = false;
      if (have_path && planner.path_blocked(path)) special = true;

      if (replan_clock(params.f_gp, t, last_plan_time, special) || !have_path) {
        try {
          path = planner.plan(robot.pose.position(), config.goal.position());
          have_path = true;
          last_plan_time = t;
          no_path_since = -1.0;
          if (path.waypoints.size() >= 2) {
            Vec2 d = path.waypoints[1] - path.waypoints[0];
            selection.fresh_global_plan = true;
            selection.plan_initial_heading = std::atan2(d.y, d.x);
          }
        } catch (const NoPath&) {
          have_path = false;
          if (no_path_since < 0) no_path_since = t;
        }
      }

      obs = to_observation(ego);

      if (!have_path) {
        v_cmd = 0.0;
        w_cmd = 0.5 * config.limits.w_max;  // look around for a way out
      } else {
        auto gaps = detect_gaps(ego, params.d_la, config.robot_radius,
                                params.inflation_distance);
        Pose lgoal = local_goal(path, robot.pose, params.d_la);
        Transform2 tf = Transform2::from_pose(robot.pose);
        std::vector<Vec2> obstacle_pts;
        for (const auto& p : ego.obstacle_points(params.d_la))
          obstacle_pts.push_back(tf.apply(p));
        auto candidates = plan_candidates(gaps, lgoal, robot.pose, params,
                                          obstacle_pts, config.robot_radius,
                                          config.limits);
        std::vector<Trajectory> feasible;
        for (auto& c : candidates)
          if (feasibility_check(c, ego, robot.pose, params.d_la, config.robot_radius,
                                params.inflation_distance,
                                params.feasibility_check_poses))
            feasible.push_back(std::move(c));
        if (feasible.empty()) {
          // no way forward: force a replan next cycle and rotate in place
          last_plan_time = -kInf;
          v_cmd = 0.0;
          w_cmd = 0.5 * config.limits.w_max;
        } else {
          int sel = select(feasible, selection, params, t);
          auto [v, w] = velocity_command(feasible[sel], robot.pose, config.limits);
          v_cmd = v;
          w_cmd = w;
        }
      }
    }

    // -- parameter retuning cadence --
    if (step_idx % tune_every == 0) {
      if (have_open) {
        open.reward = step_reward(robot.pose.position(), oracle_path);
        open.next_obs = obs;
        open.done = false;
        result.transitions.push_back(open);
      }
      TunerContext ctx{&config.world, robot.pose.position(), &rng};
      TuneDecision decision = tuner.decide(obs, ctx);
      params = decision.params;
      open = Transition{};
      open.obs = obs;
      open.action = decision.action;
      have_open = true;
    }

    // -- physics --
    RobotState next = step(robot, v_cmd, w_cmd, config.dt, config.limits);
    result.path_length += (next.pose.position() - robot.pose.position()).norm();
    robot = next;
    t += config.dt;
    ++step_idx;

    // -- termination --
    if (check_collision(config.world, robot.pose, config.robot_radius)) {
      result.failure_reason = FailureReason::collision;
      terminated = true;
    } else if (goal_dist() <= config.goal_tolerance) {
      result.success = true;
      terminated = true;
    } else if (no_path_since >= 0 && t - no_path_since > 10.0) {
      result.failure_reason = FailureReason::no_path;
      terminated = true;
    } else if (t >= config.timeout) {
      result.failure_reason = FailureReason::timeout;
      terminated = true;
    }
  }

  result.sim_runtime = t;
  if (have_open) {
    open.reward = terminal_reward(result.success, std::max(result.path_length, result.l_min),
                                  result.l_min);
    open.next_obs = obs;
    open.done = true;
    result.transitions.push_back(open);
  }
  result.wall_runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
          .count();
  return result;
}

}  // namespace navlab
