#include "shaped_pick/config.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>

namespace shaped_pick {

namespace {

// Walks one JSON object, remembering which keys were consumed so that the
// leftovers can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string path)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  std::string key_path(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const nlohmann::json* find(std::string_view key) {
    const std::string k(key);
    seen_.insert(k);
    auto it = j_.find(k);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(std::string_view key, double& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number()) throw ConfigError(key_path(key) + ": expected a number");
      out = v->get<double>();
    }
  }

  template <typename Int>
  void integer(std::string_view key, Int& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_integer()) {
        throw ConfigError(key_path(key) + ": expected an integer");
      }
      if constexpr (std::is_unsigned_v<Int>) {
        if (v->is_number_unsigned()) {
          out = v->get<Int>();
        } else if (v->get<std::int64_t>() < 0) {
          throw ConfigError(key_path(key) + ": expected a non-negative integer");
        } else {
          out = static_cast<Int>(v->get<std::int64_t>());
        }
      } else {
        out = v->get<Int>();
      }
    }
  }

  void boolean(std::string_view key, bool& out) {
    if (const auto* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(key_path(key) + ": expected a boolean");
      out = v->get<bool>();
    }
  }

  bool string(std::string_view key, std::string& out) {
    if (const auto* v = find(key)) {
      if (!v->is_string()) throw ConfigError(key_path(key) + ": expected a string");
      out = v->get<std::string>();
      return true;
    }
    return false;
  }

  void vec3(std::string_view key, Vec3& out) {
    if (const auto* v = find(key)) {
      if (!v->is_array() || v->size() != 3 ||
          !std::all_of(v->begin(), v->end(),
                       [](const auto& e) { return e.is_number(); })) {
        throw ConfigError(key_path(key) + ": expected an array of 3 numbers");
      }
      out = {(*v)[0].get<double>(), (*v)[1].get<double>(), (*v)[2].get<double>()};
    }
  }

  void int_list(std::string_view key, std::vector<int>& out) {
    if (const auto* v = find(key)) {
      if (!v->is_array() ||
          !std::all_of(v->begin(), v->end(),
                       [](const auto& e) { return e.is_number_integer(); })) {
        throw ConfigError(key_path(key) + ": expected an array of integers");
      }
      out = v->get<std::vector<int>>();
    }
  }

  // Keys present in the document that no accessor asked for.
  void reject_unknown(const std::set<std::string>& also_allowed = {}) const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key()) && !also_allowed.count(item.key())) {
        throw ConfigError("unknown key '" + key_path(item.key()) + "'");
      }
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Fn>
auto wrap_enum(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

EnvConfig env_from_json(const nlohmann::json& j) {
  EnvConfig env;
  ObjectReader r(j, "env");
  r.integer("horizon", env.horizon);
  r.number("action_scale", env.action_scale);
  r.number("grasp_radius", env.grasp_radius);
  r.number("success_threshold", env.success_threshold);
  r.number("object_half_height", env.object_half_height);
  r.number("air_goal_probability", env.air_goal_probability);
  r.reject_unknown();
  return env;
}

RewardSpec reward_from_json(const nlohmann::json& j, double threshold_default) {
  RewardSpec spec;
  ObjectReader r(j, "reward");
  std::string kind;
  if (!r.string("kind", kind)) {
    throw ConfigError("reward.kind: missing (one of vanilla, prioritized_z, "
                      "prioritized_xyz, manhattan)");
  }
  spec.kind = wrap_enum("reward.kind", [&] { return reward_kind_from_name(kind); });
  spec.success_threshold = threshold_default;
  r.number("living_cost", spec.living_cost);
  r.number("success_reward", spec.success_reward);
  r.number("success_threshold", spec.success_threshold);
  switch (spec.kind) {
    case RewardKind::kVanilla:
      break;
    case RewardKind::kPrioritizedZ:
      r.number("z_weight", spec.z_weight);
      break;
    case RewardKind::kPrioritizedXYZ:
      r.vec3("axis_weights", spec.axis_weights);
      break;
    case RewardKind::kManhattan:
      r.vec3("axis_penalties", spec.axis_penalties);
      r.number("alignment_tolerance", spec.alignment_tolerance);
      break;
  }
  try {
    r.reject_unknown();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(e.what()) + " (not valid for reward.kind '" +
                      kind + "')");
  }
  return spec;
}

RelabelStrategy strategy_from_json(const nlohmann::json& j) {
  RelabelStrategy s;
  ObjectReader r(j, "strategy");
  std::string kind;
  if (r.string("kind", kind)) {
    s.kind = wrap_enum("strategy.kind", [&] { return relabel_kind_from_name(kind); });
  }
  r.integer("k", s.k);
  r.reject_unknown();
  return s;
}

}  // namespace

bool default_clip_return(RewardKind kind) { return kind == RewardKind::kVanilla; }

nlohmann::json hyper_to_json(const DdpgHyper& h) {
  return {{"gamma", h.gamma},
          {"polyak", h.polyak},
          {"actor_lr", h.actor_lr},
          {"critic_lr", h.critic_lr},
          {"batch_size", h.batch_size},
          {"random_action_probability", h.random_action_probability},
          {"gaussian_noise_scale", h.gaussian_noise_scale},
          {"clip_return", h.clip_return},
          {"hidden_sizes", h.hidden_sizes}};
}

DdpgHyper hyper_from_json(const nlohmann::json& j, bool clip_default) {
  DdpgHyper h;
  h.clip_return = clip_default;
  ObjectReader r(j, "hyper");
  r.number("gamma", h.gamma);
  r.number("polyak", h.polyak);
  r.number("actor_lr", h.actor_lr);
  r.number("critic_lr", h.critic_lr);
  r.integer("batch_size", h.batch_size);
  r.number("random_action_probability", h.random_action_probability);
  r.number("gaussian_noise_scale", h.gaussian_noise_scale);
  r.boolean("clip_return", h.clip_return);
  r.int_list("hidden_sizes", h.hidden_sizes);
  r.reject_unknown();
  return h;
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(epochs >= 1, "epochs: must be >= 1");
  require(cycles_per_epoch >= 1, "cycles_per_epoch: must be >= 1");
  require(episodes_per_cycle >= 1, "episodes_per_cycle: must be >= 1");
  require(optimizer_steps_per_cycle >= 1, "optimizer_steps_per_cycle: must be >= 1");
  require(eval_episodes >= 1, "eval_episodes: must be >= 1");
  require(replay_capacity >= 1, "replay_capacity: must be >= 1");
  require(checkpoint_every >= 1, "checkpoint_every: must be >= 1");
  require(strategy.k >= 0, "strategy.k: must be >= 0");
  require(env.task == task, "env task does not match task");
  require(env.success_threshold == reward.success_threshold,
          "reward.success_threshold: must equal env.success_threshold");
  try {
    env.validate();
    reward.validate();
    hyper.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  ObjectReader r(j, "");
  r.integer("epochs", c.epochs);
  r.integer("cycles_per_epoch", c.cycles_per_epoch);
  r.integer("episodes_per_cycle", c.episodes_per_cycle);
  r.integer("optimizer_steps_per_cycle", c.optimizer_steps_per_cycle);
  r.integer("eval_episodes", c.eval_episodes);
  r.integer("seed", c.seed);
  std::string task;
  if (r.string("task", task)) {
    c.task = wrap_enum("task", [&] { return task_from_name(task); });
  }
  if (const auto* env = r.find("env")) c.env = env_from_json(*env);
  c.env.task = c.task;

  const auto* reward = r.find("reward");
  if (!reward) throw ConfigError("reward.kind: missing (no reward section)");
  c.reward = reward_from_json(*reward, c.env.success_threshold);

  bool clip = default_clip_return(c.reward.kind);
  if (const auto* hyper = r.find("hyper")) {
    c.hyper = hyper_from_json(*hyper, clip);
  } else {
    c.hyper.clip_return = clip;
  }
  if (const auto* strategy = r.find("strategy")) {
    c.strategy = strategy_from_json(*strategy);
  }
  r.integer("replay_capacity", c.replay_capacity);
  r.integer("checkpoint_every", c.checkpoint_every);
  r.boolean("record_wall_time", c.record_wall_time);
  r.reject_unknown();
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

nlohmann::json config_to_json(const TrainConfig& c) {
  nlohmann::json reward{{"kind", reward_kind_name(c.reward.kind)},
                        {"living_cost", c.reward.living_cost},
                        {"success_reward", c.reward.success_reward},
                        {"success_threshold", c.reward.success_threshold}};
  auto vec = [](const Vec3& v) { return nlohmann::json{v.x, v.y, v.z}; };
  switch (c.reward.kind) {
    case RewardKind::kVanilla:
      break;
    case RewardKind::kPrioritizedZ:
      reward["z_weight"] = c.reward.z_weight;
      break;
    case RewardKind::kPrioritizedXYZ:
      reward["axis_weights"] = vec(c.reward.axis_weights);
      break;
    case RewardKind::kManhattan:
      reward["axis_penalties"] = vec(c.reward.axis_penalties);
      reward["alignment_tolerance"] = c.reward.alignment_tolerance;
      break;
  }
  return {
      {"epochs", c.epochs},
      {"cycles_per_epoch", c.cycles_per_epoch},
      {"episodes_per_cycle", c.episodes_per_cycle},
      {"optimizer_steps_per_cycle", c.optimizer_steps_per_cycle},
      {"eval_episodes", c.eval_episodes},
      {"seed", c.seed},
      {"task", task_name(c.task)},
      {"env",
       {{"horizon", c.env.horizon},
        {"action_scale", c.env.action_scale},
        {"grasp_radius", c.env.grasp_radius},
        {"success_threshold", c.env.success_threshold},
        {"object_half_height", c.env.object_half_height},
        {"air_goal_probability", c.env.air_goal_probability}}},
      {"reward", reward},
      {"hyper", hyper_to_json(c.hyper)},
      {"strategy",
       {{"kind", relabel_kind_name(c.strategy.kind)}, {"k", c.strategy.k}}},
      {"replay_capacity", c.replay_capacity},
      {"checkpoint_every", c.checkpoint_every},
      {"record_wall_time", c.record_wall_time},
  };
}

}  // namespace shaped_pick
