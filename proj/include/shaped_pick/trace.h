#pragma once

#include <vector>

#include "shaped_pick/env.h"
#include "shaped_pick/vec3.h"

namespace shaped_pick {

// One recorded rollout. Positions, achieved goals and features hold the
// initial state plus one entry per step; per-step lists hold one entry per
// step. `features` and `achieved_goals` may be empty for traces re-imported
// from CSV, which carry positions only.
struct EpisodeTrace {
  Vec3 goal;
  std::vector<Vec3> gripper_positions;
  std::vector<Vec3> object_positions;
  std::vector<Action> actions;
  std::vector<double> rewards;
  std::vector<bool> success_flags;
  std::vector<Vec3> achieved_goals;
  std::vector<std::vector<double>> features;

  int length() const { return static_cast<int>(actions.size()); }
  bool final_success() const {
    return !success_flags.empty() && success_flags.back();
  }

  // Throws std::invalid_argument if list lengths disagree.
  void validate() const;
};

}  // namespace shaped_pick
