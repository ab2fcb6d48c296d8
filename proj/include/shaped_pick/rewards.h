#pragma once

#include <string_view>

#include "shaped_pick/vec3.h"

namespace shaped_pick {

enum class RewardKind { kVanilla, kPrioritizedZ, kPrioritizedXYZ, kManhattan };

// "vanilla", "prioritized_z", "prioritized_xyz", "manhattan"
std::string_view reward_kind_name(RewardKind kind);
RewardKind reward_kind_from_name(std::string_view name);

// Sparse base reward plus one optional shaping term on the gripper-to-goal
// offset. Only the fields of the selected kind are read.
struct RewardSpec {
  RewardKind kind = RewardKind::kVanilla;
  double living_cost = -1.0;
  double success_reward = 1.0;
  double success_threshold = 0.05;

  // kPrioritizedZ
  double z_weight = 10.0;
  // kPrioritizedXYZ
  Vec3 axis_weights{10.0, 5.0, 1.0};
  // kManhattan
  Vec3 axis_penalties{5.0, 2.5, 1.0};
  double alignment_tolerance = 0.01;

  void validate() const;

  static RewardSpec vanilla() { return {}; }
  static RewardSpec of_kind(RewardKind kind) {
    RewardSpec spec;
    spec.kind = kind;
    return spec;
  }
};

struct RewardInput {
  Vec3 gripper_pos;
  Vec3 achieved_goal;
  Vec3 desired_goal;
};

// Inclusive: a distance of exactly `threshold` counts as success.
bool is_success(const Vec3& achieved, const Vec3& desired, double threshold);

// Non-negative penalty subtracted from the base reward.
double shaping_penalty(const RewardSpec& spec, const Vec3& gripper_pos,
                       const Vec3& desired_goal);

double compute_reward(const RewardSpec& spec, const RewardInput& input);

}  // namespace shaped_pick
