#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "shaped_pick/agent.h"
#include "shaped_pick/config.h"
#include "shaped_pick/trace.h"

namespace shaped_pick {

struct EpochMetrics {
  int epoch = 0;
  double train_success = 0.0;
  double eval_success = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double wall_seconds = 0.0;
};

struct RunMetrics {
  std::vector<EpochMetrics> rows;

  std::vector<double> eval_series() const;
};

inline constexpr const char* kMetricsHeader =
    "epoch,train_success,eval_success,critic_loss,actor_loss,wall_seconds";

// Raised when training stops on a non-finite loss; rows written so far stay.
class TrainingHalted : public std::runtime_error {
 public:
  TrainingHalted(int epoch, const std::string& reason);
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

using Policy = std::function<Action(const Observation&)>;

// One episode from a fresh reset drawn from `env_rng`. Rewards and success
// flags are evaluated at the post-step state under `reward`.
EpisodeTrace rollout(const EnvConfig& env, const RewardSpec& reward,
                     const Policy& policy, Rng& env_rng);

Policy greedy_policy(const DdpgAgent& agent);

// Fraction of n fresh episodes whose final step is a success.
double evaluate(const Policy& policy, const EnvConfig& env,
                const RewardSpec& reward, int n, Rng& rng);
double evaluate(const DdpgAgent& agent, const TrainConfig& config, int n,
                Rng& rng);

// Evaluation stream for an epoch; independent of the training streams.
Rng eval_rng(std::uint64_t seed, int epoch);

struct RunOptions {
  // When set, config.json, metrics.csv and checkpoints/ are written here.
  std::optional<std::filesystem::path> run_dir;
  // Called after each epoch; returning false stops the run early.
  std::function<bool(const EpochMetrics&, const DdpgAgent&)> on_epoch;
  bool log_progress = false;
};

struct RunResult {
  RunMetrics metrics;
  DdpgAgent agent;
  std::size_t replay_size = 0;
  std::size_t env_steps = 0;
};

RunResult run(const TrainConfig& config, const RunOptions& options = {});

// First epoch e with mean(series[e, e+window)) >= threshold.
std::optional<int> convergence_epoch(std::span<const double> series,
                                     double threshold, int window);

std::filesystem::path checkpoint_path(const std::filesystem::path& run_dir,
                                      int epoch);

void write_checkpoint(const DdpgAgent& agent, const std::filesystem::path& path);
DdpgAgent read_checkpoint(const std::filesystem::path& path);

RunMetrics read_metrics(const std::filesystem::path& csv_path);

}  // namespace shaped_pick
