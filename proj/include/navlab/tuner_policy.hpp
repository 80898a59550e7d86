#pragma once

#include <vector>

#include "navlab/local_planner.hpp"
#include "navlab/rng.hpp"
#include "navlab/sensing.hpp"
#include "navlab/world.hpp"

namespace navlab {

// Side information available to a tuner at decision time. Oracle-style tuners
// may read the true world; learned tuners must use the observation only.
struct TunerContext {
  const WorldSpec* world = nullptr;
  Vec2 position;
  Rng* rng = nullptr;  // episode-owned stream, for exploration
};

struct TuneDecision {
  NavParams params;
  std::vector<int> action;  // per-branch indices on the tuner's parameter grid
};

class TunerPolicy {
 public:
  virtual ~TunerPolicy() = default;
  virtual TuneDecision decide(const Observation& obs, const TunerContext& ctx) const = 0;
};

}  // namespace navlab
