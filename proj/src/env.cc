#include "shaped_pick/env.h"

#include "shaped_pick/rewards.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace shaped_pick {

namespace {

constexpr int kMaxRejections = 1000;
constexpr double kMinObjectSeparation = 0.1;

double xy_distance(const Vec3& a, const Vec3& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace

std::string_view task_name(Task task) {
  switch (task) {
    case Task::kPickAndPlace:
      return "pick_and_place";
    case Task::kReach:
      return "reach";
  }
  return "?";
}

Task task_from_name(std::string_view name) {
  if (name == "pick_and_place") return Task::kPickAndPlace;
  if (name == "reach") return Task::kReach;
  throw std::invalid_argument("unknown task '" + std::string(name) +
                              "' (expected pick_and_place or reach)");
}

void EnvConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("env.") + what);
  };
  require(horizon >= 1, "horizon must be >= 1");
  require(action_scale > 0, "action_scale must be positive");
  require(grasp_radius > 0, "grasp_radius must be positive");
  require(success_threshold > 0, "success_threshold must be positive");
  require(object_half_height > 0, "object_half_height must be positive");
  require(air_goal_probability >= 0 && air_goal_probability <= 1,
          "air_goal_probability must lie in [0,1]");
}

Action Action::clamped() const {
  return {std::clamp(dx, -1.0, 1.0), std::clamp(dy, -1.0, 1.0),
          std::clamp(dz, -1.0, 1.0), std::clamp(grip, -1.0, 1.0)};
}

int feature_size(Task task) { return task == Task::kReach ? 7 : 14; }

Vec3 sample_goal(const EnvConfig& cfg, Rng& rng) {
  Vec3 goal;
  goal.x = uniform(rng, 0.2, 0.8);
  goal.y = uniform(rng, 0.2, 0.8);
  const bool in_air = uniform(rng, 0.0, 1.0) < cfg.air_goal_probability;
  // uniform() draws from [0.05, 0.45); mirror it onto (0.05, 0.45].
  goal.z = in_air ? 0.5 - uniform(rng, 0.05, 0.45) : cfg.object_half_height;
  return goal;
}

ResetResult reset(const EnvConfig& cfg, Rng& rng) {
  EnvState state;
  state.gripper_pos = {uniform(rng, 0.2, 0.8), uniform(rng, 0.2, 0.8),
                       uniform(rng, 0.3, 0.7)};

  int tries = 0;
  do {
    if (++tries > kMaxRejections) {
      throw std::runtime_error("reset: could not place object away from gripper");
    }
    state.object_pos = {uniform(rng, 0.2, 0.8), uniform(rng, 0.2, 0.8),
                        cfg.object_half_height};
  } while (xy_distance(state.object_pos, state.gripper_pos) <
           kMinObjectSeparation);

  const Vec3 start = achieved_goal(state, cfg);
  Vec3 goal;
  tries = 0;
  do {
    if (++tries > kMaxRejections) {
      throw std::runtime_error("reset: could not place goal away from start");
    }
    goal = sample_goal(cfg, rng);
  } while (distance(goal, start) < cfg.success_threshold);

  return {state, goal};
}

StepResult step(const EnvState& state, const Action& action,
                const EnvConfig& cfg, const Vec3& goal) {
  if (state.step_index >= cfg.horizon) {
    throw std::logic_error("step: episode already reached horizon " +
                           std::to_string(cfg.horizon));
  }
  const Action a = action.clamped();

  EnvState next = state;
  next.gripper_pos =
      clamp(state.gripper_pos + cfg.action_scale * Vec3{a.dx, a.dy, a.dz}, 0.0,
            1.0);
  next.prev_gripper_delta = next.gripper_pos - state.gripper_pos;
  next.grip_closed = a.grip <= 0.0;

  if (cfg.task == Task::kPickAndPlace) {
    if (!next.grip_closed) {
      if (next.attached) next.object_pos.z = cfg.object_half_height;
      next.attached = false;
    } else if (!next.attached &&
               distance(next.gripper_pos, next.object_pos) <=
                   cfg.grasp_radius) {
      next.attached = true;
    }
    if (next.attached) next.object_pos = next.gripper_pos;
  }
  ++next.step_index;

  StepResult result;
  result.state = next;
  result.achieved_goal = achieved_goal(next, cfg);
  result.success =
      is_success(result.achieved_goal, goal, cfg.success_threshold);
  return result;
}

Vec3 achieved_goal(const EnvState& state, const EnvConfig& cfg) {
  return cfg.task == Task::kReach ? state.gripper_pos : state.object_pos;
}

Observation observe(const EnvState& state, const Vec3& goal,
                    const EnvConfig& cfg) {
  Observation obs;
  obs.features.reserve(static_cast<std::size_t>(feature_size(cfg.task)));
  auto push = [&](const Vec3& v) {
    obs.features.push_back(v.x);
    obs.features.push_back(v.y);
    obs.features.push_back(v.z);
  };
  push(state.gripper_pos);
  obs.features.push_back(state.grip_closed ? 1.0 : 0.0);
  if (cfg.task == Task::kPickAndPlace) {
    push(state.object_pos);
    push(state.object_pos - state.gripper_pos);
    push(state.prev_gripper_delta);
    obs.features.push_back(state.attached ? 1.0 : 0.0);
  } else {
    push(state.prev_gripper_delta);
  }
  obs.achieved_goal = achieved_goal(state, cfg);
  obs.desired_goal = goal;
  return obs;
}

}  // namespace shaped_pick
