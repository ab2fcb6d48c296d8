#include "shaped_pick/trainer.h"

#include <filesystem>

#include "doctest.h"
#include "test_util.h"

using namespace shaped_pick;

namespace {

TrainConfig tiny_config(RewardKind kind = RewardKind::kVanilla) {
  TrainConfig c;
  c.epochs = 3;
  c.cycles_per_epoch = 2;
  c.episodes_per_cycle = 2;
  c.optimizer_steps_per_cycle = 3;
  c.eval_episodes = 2;
  c.seed = 5;
  c.reward = RewardSpec::of_kind(kind);
  c.hyper.batch_size = 16;
  c.hyper.hidden_sizes = {8};
  c.hyper.clip_return = default_clip_return(kind);
  c.checkpoint_every = 2;
  return c;
}

// Moves straight at the goal; solves the reach task by construction.
Action homing(const Observation& obs) {
  const Vec3 d = obs.desired_goal - obs.achieved_goal;
  return Action{d.x / 0.05, d.y / 0.05, d.z / 0.05, 1.0}.clamped();
}

}  // namespace

TEST_CASE("rollout records a consistent episode") {
  const EnvConfig env;
  const RewardSpec reward = RewardSpec::of_kind(RewardKind::kManhattan);
  Rng rng(1);
  const EpisodeTrace trace = rollout(env, reward, homing, rng);
  CHECK_NOTHROW(trace.validate());
  CHECK(trace.length() == env.horizon);
  REQUIRE(trace.features.size() == 51);
  REQUIRE(trace.achieved_goals.size() == 51);
  for (int t = 0; t < trace.length(); ++t) {
    const auto i = static_cast<std::size_t>(t);
    const double expected = compute_reward(
        reward, {trace.gripper_positions[i + 1], trace.achieved_goals[i + 1], trace.goal});
    CHECK(trace.rewards[i] == expected);
    CHECK(trace.success_flags[i] ==
          is_success(trace.achieved_goals[i + 1], trace.goal, reward.success_threshold));
  }
  Rng again(1);
  CHECK(rollout(env, reward, homing, again).gripper_positions == trace.gripper_positions);
}

TEST_CASE("evaluate a scripted reach policy") {
  EnvConfig env;
  env.task = Task::kReach;
  Rng rng(2);
  CHECK(evaluate(homing, env, RewardSpec{}, 25, rng) == 1.0);
  const Policy idle = [](const Observation&) { return Action{}; };
  CHECK(evaluate(idle, env, RewardSpec{}, 25, rng) == 0.0);
}

TEST_CASE("convergence_epoch") {
  const std::vector<double> s{0.0, 0.2, 0.6, 0.4, 0.5, 0.8, 0.1};
  CHECK(convergence_epoch(s, 0.5, 1) == 2);
  CHECK(convergence_epoch(s, 0.5, 2) == 2);
  CHECK(convergence_epoch(s, 0.5, 3) == 2);
  CHECK(convergence_epoch(s, 0.9, 1) == std::nullopt);
  CHECK(convergence_epoch(s, 0.5, 10) == std::nullopt);
  // A window that would run past the end does not count.
  CHECK(convergence_epoch(std::vector<double>{0, 0, 1, 1}, 1.0, 3) == std::nullopt);
  CHECK(convergence_epoch(std::vector<double>{0.5, 0.5, 0.5}, 0.5, 3) == 0);
  CHECK_THROWS_AS(convergence_epoch(s, 0.5, 0), std::invalid_argument);
  CHECK_THROWS_AS(convergence_epoch(s, 0.0, 1), std::invalid_argument);
}

TEST_CASE("run writes metrics, config and checkpoints") {
  testing::TempDir dir("run");
  const TrainConfig config = tiny_config(RewardKind::kPrioritizedXYZ);
  RunOptions options;
  options.run_dir = dir.path();
  const RunResult result = run(config, options);

  CHECK(result.metrics.rows.size() == 3);
  CHECK(result.env_steps == 3u * 2 * 2 * 50);
  // 12 episodes of 240 transitions each.
  CHECK(result.replay_size == 12u * 240);
  for (const auto& row : result.metrics.rows) {
    CHECK(row.wall_seconds == 0.0);
    CHECK(row.eval_success >= 0.0);
    CHECK(row.eval_success <= 1.0);
  }

  const RunMetrics csv = read_metrics(dir / "metrics.csv");
  REQUIRE(csv.rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(csv.rows[i].epoch == static_cast<int>(i));
    CHECK(csv.rows[i].critic_loss == result.metrics.rows[i].critic_loss);
    CHECK(csv.rows[i].eval_success == result.metrics.rows[i].eval_success);
  }
  CHECK(testing::read_file(dir / "metrics.csv").rfind(kMetricsHeader, 0) == 0);

  CHECK(std::filesystem::exists(checkpoint_path(dir.path(), 1)));
  CHECK(std::filesystem::exists(checkpoint_path(dir.path(), 2)));
  CHECK_FALSE(std::filesystem::exists(checkpoint_path(dir.path(), 0)));

  const DdpgAgent restored = read_checkpoint(checkpoint_path(dir.path(), 2));
  CHECK(agent_to_json(restored).dump() == agent_to_json(result.agent).dump());
  CHECK(config_to_json(load_config(dir / "config.json")) == config_to_json(config));
}

TEST_CASE("run is reproducible in memory") {
  const TrainConfig config = tiny_config();
  const RunResult a = run(config);
  const RunResult b = run(config);
  for (std::size_t i = 0; i < a.metrics.rows.size(); ++i) {
    CHECK(a.metrics.rows[i].critic_loss == b.metrics.rows[i].critic_loss);
    CHECK(a.metrics.rows[i].actor_loss == b.metrics.rows[i].actor_loss);
  }
  TrainConfig other = config;
  other.seed = 6;
  CHECK(run(other).metrics.rows[0].critic_loss != a.metrics.rows[0].critic_loss);
}

TEST_CASE("on_epoch can stop a run early") {
  testing::TempDir dir("stop");
  TrainConfig config = tiny_config();
  config.epochs = 10;
  RunOptions options;
  options.run_dir = dir.path();
  options.on_epoch = [](const EpochMetrics& m, const DdpgAgent&) { return m.epoch < 1; };
  const RunResult result = run(config, options);
  CHECK(result.metrics.rows.size() == 2);
  CHECK(read_metrics(dir / "metrics.csv").rows.size() == 2);
  CHECK(std::filesystem::exists(checkpoint_path(dir.path(), 1)));
}

TEST_CASE("divergence halts with the epoch") {
  testing::TempDir dir("halt");
  TrainConfig config = tiny_config();
  config.hyper.actor_lr = 1e200;
  config.hyper.critic_lr = 1e200;
  RunOptions options;
  options.run_dir = dir.path();
  try {
    run(config, options);
    FAIL("expected the run to halt");
  } catch (const TrainingHalted& e) {
    CHECK(e.epoch() >= 0);
    CHECK(read_metrics(dir / "metrics.csv").rows.size() == static_cast<std::size_t>(e.epoch()));
  }
}

TEST_CASE("checkpoint and metrics readers report bad files") {
  testing::TempDir dir("bad");
  CHECK_THROWS_AS(read_checkpoint(dir / "none.json"), std::runtime_error);
  CHECK_THROWS(read_metrics(dir / "none.csv"));
  testing::write_file(dir / "m.csv", "epoch,x\n1,2\n");
  CHECK_THROWS(read_metrics(dir / "m.csv"));
}

TEST_CASE("single-episode reach run") {
  TrainConfig config = tiny_config();
  config.task = Task::kReach;
  config.env.task = Task::kReach;
  config.epochs = 1;
  config.cycles_per_epoch = 1;
  config.episodes_per_cycle = 1;
  const RunResult result = run(config);
  CHECK(result.metrics.rows.size() == 1);
  CHECK(result.replay_size == 240);
  CHECK(result.agent.feature_size == 7);
}
