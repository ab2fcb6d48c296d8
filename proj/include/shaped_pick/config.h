#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "shaped_pick/agent.h"
#include "shaped_pick/env.h"
#include "shaped_pick/replay.h"
#include "shaped_pick/rewards.h"

namespace shaped_pick {

struct TrainConfig {
  int epochs = 150;
  int cycles_per_epoch = 10;
  int episodes_per_cycle = 16;
  int optimizer_steps_per_cycle = 40;
  int eval_episodes = 20;
  std::uint64_t seed = 0;
  Task task = Task::kPickAndPlace;
  EnvConfig env;
  RewardSpec reward;
  DdpgHyper hyper;
  RelabelStrategy strategy;
  std::size_t replay_capacity = 100000;
  // A checkpoint is written every N epochs and after the last one.
  int checkpoint_every = 10;
  // Off by default so metrics.csv is a pure function of (seed, config).
  bool record_wall_time = false;

  // Throws ConfigError naming the offending key.
  void validate() const;
};

// Malformed or inconsistent run configuration. what() names the key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Defaults for `reward.kind`: return clipping only for the unshaped reward.
bool default_clip_return(RewardKind kind);

// Strict parse: unknown keys and wrong types are rejected, reward.kind is
// required, everything else falls back to its default.
TrainConfig config_from_json(const nlohmann::json& j);
TrainConfig load_config(const std::filesystem::path& path);

// Fully materialized; config_from_json(config_to_json(c)) == c.
nlohmann::json config_to_json(const TrainConfig& config);

nlohmann::json hyper_to_json(const DdpgHyper& hyper);
DdpgHyper hyper_from_json(const nlohmann::json& j, bool clip_default);

}  // namespace shaped_pick
