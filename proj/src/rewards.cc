#include "shaped_pick/rewards.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace shaped_pick {

std::string_view reward_kind_name(RewardKind kind) {
  switch (kind) {
    case RewardKind::kVanilla:
      return "vanilla";
    case RewardKind::kPrioritizedZ:
      return "prioritized_z";
    case RewardKind::kPrioritizedXYZ:
      return "prioritized_xyz";
    case RewardKind::kManhattan:
      return "manhattan";
  }
  return "?";
}

RewardKind reward_kind_from_name(std::string_view name) {
  for (RewardKind kind :
       {RewardKind::kVanilla, RewardKind::kPrioritizedZ,
        RewardKind::kPrioritizedXYZ, RewardKind::kManhattan}) {
    if (reward_kind_name(kind) == name) return kind;
  }
  throw std::invalid_argument(
      "unknown reward kind '" + std::string(name) +
      "' (expected vanilla, prioritized_z, prioritized_xyz or manhattan)");
}

void RewardSpec::validate() const {
  if (!(success_threshold > 0)) {
    throw std::invalid_argument("reward.success_threshold must be positive");
  }
  if (!(alignment_tolerance > 0)) {
    throw std::invalid_argument("reward.alignment_tolerance must be positive");
  }
  auto non_negative = [](const Vec3& v) {
    return v.x >= 0 && v.y >= 0 && v.z >= 0;
  };
  if (!(z_weight >= 0) || !non_negative(axis_weights) ||
      !non_negative(axis_penalties)) {
    throw std::invalid_argument("reward weights and penalties must be >= 0");
  }
}

bool is_success(const Vec3& achieved, const Vec3& desired, double threshold) {
  return distance(achieved, desired) <= threshold;
}

double shaping_penalty(const RewardSpec& spec, const Vec3& gripper_pos,
                       const Vec3& desired_goal) {
  const Vec3 offset = gripper_pos - desired_goal;
  switch (spec.kind) {
    case RewardKind::kVanilla:
      return 0.0;
    case RewardKind::kPrioritizedZ:
      return spec.z_weight * std::abs(offset.z);
    case RewardKind::kPrioritizedXYZ:
      return spec.axis_weights.x * std::abs(offset.x) +
             spec.axis_weights.y * std::abs(offset.y) +
             spec.axis_weights.z * std::abs(offset.z);
    case RewardKind::kManhattan: {
      double penalty = 0.0;
      for (int axis = 0; axis < 3; ++axis) {
        if (std::abs(offset[axis]) > spec.alignment_tolerance) {
          penalty += spec.axis_penalties[axis];
        }
      }
      return penalty;
    }
  }
  return 0.0;
}

double compute_reward(const RewardSpec& spec, const RewardInput& input) {
  const double base =
      is_success(input.achieved_goal, input.desired_goal,
                 spec.success_threshold)
          ? spec.success_reward
          : spec.living_cost;
  return base - shaping_penalty(spec, input.gripper_pos, input.desired_goal);
}

}  // namespace shaped_pick
