#pragma once

#include "navlab/errors.hpp"
#include "navlab/global_planner.hpp"

namespace navlab {

// End-of-run reward: success scales 1000 by the realized/optimal length
// ratio, failure is a flat -1000.
inline double terminal_reward(bool success, double l, double l_min) {
  if (!success) return -1000.0;
  if (l_min <= 0.0) throw Error("terminal_reward: l_min must be positive");
  return 1000.0 * (l / l_min);
}

// Dense per-decision reward: negative distance to the reference shortest path.
inline double step_reward(const Vec2& position, const GlobalPath& oracle_path) {
  return -distance_to_path(oracle_path, position);
}

}  // namespace navlab
