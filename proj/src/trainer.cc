#include "shaped_pick/trainer.h"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "shaped_pick/replay.h"

namespace shaped_pick {

namespace {

// Stream tags for derive_rng.
enum StreamTag : std::uint64_t {
  kInitStream = 1,
  kRolloutStream = 2,
  kRelabelStream = 3,
  kBatchStream = 4,
  kEvalStream = 5,
};

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

std::vector<double> RunMetrics::eval_series() const {
  std::vector<double> series;
  series.reserve(rows.size());
  for (const auto& r : rows) series.push_back(r.eval_success);
  return series;
}

TrainingHalted::TrainingHalted(int epoch, const std::string& reason)
    : std::runtime_error("training halted at epoch " + std::to_string(epoch) +
                         ": " + reason),
      epoch_(epoch) {}

EpisodeTrace rollout(const EnvConfig& env, const RewardSpec& reward,
                     const Policy& policy, Rng& env_rng) {
  auto [state, goal] = reset(env, env_rng);
  EpisodeTrace trace;
  trace.goal = goal;
  const auto horizon = static_cast<std::size_t>(env.horizon);
  trace.gripper_positions.reserve(horizon + 1);
  trace.object_positions.reserve(horizon + 1);
  trace.features.reserve(horizon + 1);
  trace.achieved_goals.reserve(horizon + 1);
  trace.actions.reserve(horizon);
  trace.rewards.reserve(horizon);
  trace.success_flags.reserve(horizon);

  Observation obs = observe(state, goal, env);
  trace.gripper_positions.push_back(state.gripper_pos);
  trace.object_positions.push_back(state.object_pos);
  trace.achieved_goals.push_back(obs.achieved_goal);
  for (int t = 0; t < env.horizon; ++t) {
    const Action action = policy(obs).clamped();
    trace.features.push_back(std::move(obs.features));
    const StepResult next = step(state, action, env, goal);
    state = next.state;
    trace.actions.push_back(action);
    trace.rewards.push_back(
        compute_reward(reward, {state.gripper_pos, next.achieved_goal, goal}));
    trace.success_flags.push_back(
        is_success(next.achieved_goal, goal, reward.success_threshold));
    obs = observe(state, goal, env);
    trace.gripper_positions.push_back(state.gripper_pos);
    trace.object_positions.push_back(state.object_pos);
    trace.achieved_goals.push_back(obs.achieved_goal);
  }
  trace.features.push_back(std::move(obs.features));
  return trace;
}

Policy greedy_policy(const DdpgAgent& agent) {
  return [&agent](const Observation& obs) {
    Rng unused(0);
    return act(agent, obs, /*explore=*/false, unused);
  };
}

double evaluate(const Policy& policy, const EnvConfig& env,
                const RewardSpec& reward, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("evaluate: n must be >= 1");
  int successes = 0;
  for (int i = 0; i < n; ++i) {
    if (rollout(env, reward, policy, rng).final_success()) ++successes;
  }
  return static_cast<double>(successes) / n;
}

double evaluate(const DdpgAgent& agent, const TrainConfig& config, int n,
                Rng& rng) {
  return evaluate(greedy_policy(agent), config.env, config.reward, n, rng);
}

Rng eval_rng(std::uint64_t seed, int epoch) {
  return derive_rng(seed, {kEvalStream, static_cast<std::uint64_t>(epoch)});
}

std::filesystem::path checkpoint_path(const std::filesystem::path& run_dir,
                                      int epoch) {
  return run_dir / "checkpoints" / ("epoch_" + std::to_string(epoch) + ".json");
}

void write_checkpoint(const DdpgAgent& agent, const std::filesystem::path& path) {
  write_text(path, agent_to_json(agent).dump() + "\n");
}

DdpgAgent read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  try {
    return agent_from_json(nlohmann::json::parse(in));
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

RunResult run(const TrainConfig& config, const RunOptions& options) {
  config.validate();
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();

  Rng init_rng = derive_rng(config.seed, {kInitStream});
  Rng rollout_rng = derive_rng(config.seed, {kRolloutStream});
  Rng relabel_rng = derive_rng(config.seed, {kRelabelStream});
  Rng batch_rng = derive_rng(config.seed, {kBatchStream});

  RunResult result{.metrics = {},
                   .agent = make_agent(feature_size(config.task), config.hyper,
                                       config.reward, init_rng)};
  DdpgAgent& agent = result.agent;
  ReplayBuffer buffer(config.replay_capacity);

  std::ofstream metrics_csv;
  if (options.run_dir) {
    std::filesystem::create_directories(*options.run_dir / "checkpoints");
    write_text(*options.run_dir / "config.json",
               config_to_json(config).dump(2) + "\n");
    metrics_csv.open(*options.run_dir / "metrics.csv", std::ios::binary);
    if (!metrics_csv) {
      throw std::runtime_error("cannot write " +
                               (*options.run_dir / "metrics.csv").string());
    }
    metrics_csv << kMetricsHeader << '\n' << std::flush;
  }

  const Policy explore_policy = [&](const Observation& obs) {
    return act(agent, obs, /*explore=*/true, rollout_rng);
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    int train_successes = 0;
    double critic_loss_sum = 0.0;
    double actor_loss_sum = 0.0;
    for (int cycle = 0; cycle < config.cycles_per_epoch; ++cycle) {
      for (int e = 0; e < config.episodes_per_cycle; ++e) {
        const EpisodeTrace trace =
            rollout(config.env, config.reward, explore_policy, rollout_rng);
        result.env_steps += trace.actions.size();
        if (trace.final_success()) ++train_successes;
        store_episode(buffer, trace, config.strategy, config.reward, relabel_rng);
        normalizer_update(agent.normalizer, trace);
      }
      for (int s = 0; s < config.optimizer_steps_per_cycle; ++s) {
        const auto batch = buffer.sample_batch(
            static_cast<std::size_t>(config.hyper.batch_size), batch_rng);
        TrainLosses losses;
        try {
          losses = train_batch(agent, batch);
        } catch (const std::runtime_error& e) {
          throw TrainingHalted(epoch, e.what());
        }
        critic_loss_sum += losses.critic;
        actor_loss_sum += losses.actor;
      }
      update_targets(agent);
    }

    Rng rng = eval_rng(config.seed, epoch);
    EpochMetrics row;
    row.epoch = epoch;
    row.train_success = static_cast<double>(train_successes) /
                        (config.cycles_per_epoch * config.episodes_per_cycle);
    row.eval_success = evaluate(agent, config, config.eval_episodes, rng);
    const double updates =
        static_cast<double>(config.cycles_per_epoch) * config.optimizer_steps_per_cycle;
    row.critic_loss = critic_loss_sum / updates;
    row.actor_loss = actor_loss_sum / updates;
    const double elapsed =
        std::chrono::duration<double>(Clock::now() - start).count();
    row.wall_seconds = config.record_wall_time ? elapsed : 0.0;
    result.metrics.rows.push_back(row);

    if (metrics_csv.is_open()) {
      metrics_csv << row.epoch << ',' << fmt(row.train_success) << ','
                  << fmt(row.eval_success) << ',' << fmt(row.critic_loss) << ','
                  << fmt(row.actor_loss) << ',' << fmt(row.wall_seconds) << '\n'
                  << std::flush;
    }
    if (options.log_progress) {
      std::fprintf(stderr,
                   "epoch %3d  train %.3f  eval %.3f  critic %.4g  actor %.4g  "
                   "(%.1fs)\n",
                   epoch, row.train_success, row.eval_success, row.critic_loss,
                   row.actor_loss, elapsed);
    }

    const bool keep_going = !options.on_epoch || options.on_epoch(row, agent);
    const bool last = epoch + 1 == config.epochs || !keep_going;
    if (options.run_dir &&
        ((epoch + 1) % config.checkpoint_every == 0 || last)) {
      write_checkpoint(agent, checkpoint_path(*options.run_dir, epoch));
    }
    if (!keep_going) break;
  }
  result.replay_size = buffer.size();
  return result;
}

std::optional<int> convergence_epoch(std::span<const double> series,
                                     double threshold, int window) {
  if (window < 1) throw std::invalid_argument("convergence_epoch: window must be >= 1");
  if (!(threshold > 0 && threshold <= 1)) {
    throw std::invalid_argument("convergence_epoch: threshold must lie in (0,1]");
  }
  const auto w = static_cast<std::size_t>(window);
  for (std::size_t e = 0; e + w <= series.size(); ++e) {
    double sum = 0.0;
    for (std::size_t i = e; i < e + w; ++i) sum += series[i];
    // Compare sums to avoid dividing: mean >= threshold.
    if (sum >= threshold * static_cast<double>(w)) return static_cast<int>(e);
  }
  return std::nullopt;
}

RunMetrics read_metrics(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot read " + csv_path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw std::runtime_error(csv_path.string() + ": unexpected metrics header");
  }
  RunMetrics metrics;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string f;
    std::vector<double> v;
    while (std::getline(fields, f, ',')) {
      double x = 0.0;
      auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), x);
      if (ec != std::errc() || end != f.data() + f.size()) {
        throw std::runtime_error(csv_path.string() + ": bad value '" + f + "'");
      }
      v.push_back(x);
    }
    if (v.size() != 6) {
      throw std::runtime_error(csv_path.string() + ": expected 6 columns");
    }
    metrics.rows.push_back({static_cast<int>(v[0]), v[1], v[2], v[3], v[4], v[5]});
  }
  return metrics;
}

}  // namespace shaped_pick
