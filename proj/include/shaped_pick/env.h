#pragma once

#include <string_view>
#include <vector>

#include "shaped_pick/random.h"
#include "shaped_pick/vec3.h"

namespace shaped_pick {

// kReach drops the object: the achieved goal is the gripper itself.
enum class Task { kPickAndPlace, kReach };

std::string_view task_name(Task task);
Task task_from_name(std::string_view name);  // throws std::invalid_argument

struct EnvConfig {
  int horizon = 50;
  double action_scale = 0.05;
  double grasp_radius = 0.03;
  double success_threshold = 0.05;
  double object_half_height = 0.02;
  double air_goal_probability = 0.5;
  Task task = Task::kPickAndPlace;

  // Throws std::invalid_argument on a non-positive field.
  void validate() const;
};

struct EnvState {
  Vec3 gripper_pos;
  bool grip_closed = false;
  Vec3 object_pos;
  bool attached = false;
  Vec3 prev_gripper_delta;
  int step_index = 0;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

// Displacement command in [-1,1]^3 scaled by action_scale; grip <= 0 closes.
struct Action {
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;
  double grip = 0.0;

  Action clamped() const;
  friend bool operator==(const Action&, const Action&) = default;
};

inline constexpr int kActionSize = 4;
inline constexpr int kGoalSize = 3;

// Feature layout, pick-and-place (14):
//   [0,3) gripper_pos  [3] grip_closed  [4,7) object_pos
//   [7,10) object_pos - gripper_pos  [10,13) prev_gripper_delta  [13] attached
// Reach (7): gripper_pos, grip_closed, prev_gripper_delta.
int feature_size(Task task);

struct Observation {
  std::vector<double> features;
  Vec3 achieved_goal;
  Vec3 desired_goal;
};

struct ResetResult {
  EnvState state;
  Vec3 goal;
};

struct StepResult {
  EnvState state;
  Vec3 achieved_goal;
  bool success = false;
};

Vec3 sample_goal(const EnvConfig& cfg, Rng& rng);

// Throws std::runtime_error if the separation constraints cannot be met in
// 1000 draws, which only happens for a broken configuration.
ResetResult reset(const EnvConfig& cfg, Rng& rng);

// Pure transition. Throws std::logic_error when stepping past the horizon.
StepResult step(const EnvState& state, const Action& action,
                const EnvConfig& cfg, const Vec3& goal);

Vec3 achieved_goal(const EnvState& state, const EnvConfig& cfg);

Observation observe(const EnvState& state, const Vec3& goal,
                    const EnvConfig& cfg);

}  // namespace shaped_pick
