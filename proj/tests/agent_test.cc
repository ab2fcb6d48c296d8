#include "shaped_pick/agent.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "test_util.h"

using namespace shaped_pick;
using shaped_pick::testing::random_vec;

namespace {

DdpgHyper small_hyper() {
  DdpgHyper h;
  h.hidden_sizes = {16, 16};
  return h;
}

std::vector<double> random_features(Rng& rng, int n) {
  std::vector<double> f(static_cast<std::size_t>(n));
  for (double& x : f) x = uniform(rng, -1, 1);
  return f;
}

std::vector<Transition> random_batch(Rng& rng, int feature_size, int n) {
  std::vector<Transition> batch;
  for (int i = 0; i < n; ++i) {
    Transition t;
    t.observation_features = random_features(rng, feature_size);
    t.next_observation_features = random_features(rng, feature_size);
    t.action = {uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1),
                uniform(rng, -1, 1)};
    t.goal = random_vec(rng);
    t.reward = i % 4 == 0 ? 1.0 : -1.0;
    batch.push_back(t);
  }
  return batch;
}

bool same_params(const nn::MlpParams& a, const nn::MlpParams& b) {
  for (int l = 0; l < a.num_layers(); ++l) {
    if (a.weights[l] != b.weights[l] || a.biases[l] != b.biases[l]) return false;
  }
  return true;
}

// Critic loss recomputed from the networks directly.
double critic_loss_oracle(const DdpgAgent& agent, const std::vector<Transition>& batch) {
  double total = 0.0;
  for (const Transition& t : batch) {
    const std::vector<double> s = policy_input(agent, t.observation_features, t.goal);
    const std::vector<double> s2 =
        policy_input(agent, t.next_observation_features, t.goal);
    std::vector<double> next_in = s2;
    for (double u : nn::forward(agent.target_actor, s2)) next_in.push_back(u);
    double y = t.reward + agent.hyper.gamma * nn::forward(agent.target_critic, next_in)[0];
    if (agent.hyper.clip_return) y = std::clamp(y, agent.clip.low, agent.clip.high);
    std::vector<double> in = s;
    for (double a : {t.action.dx, t.action.dy, t.action.dz, t.action.grip}) in.push_back(a);
    const double e = nn::forward(agent.critic, in)[0] - y;
    total += e * e;
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace

TEST_CASE("make_agent") {
  Rng rng(1);
  const DdpgAgent agent = make_agent(14, DdpgHyper{}, RewardSpec{}, rng);
  CHECK(agent.actor.layer_sizes == std::vector<int>{17, 64, 64, 4});
  CHECK(agent.critic.layer_sizes == std::vector<int>{21, 64, 64, 1});
  CHECK(agent.actor.output_activation == nn::OutputActivation::kTanh);
  CHECK(agent.critic.output_activation == nn::OutputActivation::kIdentity);
  CHECK(same_params(agent.actor, agent.target_actor));
  CHECK(same_params(agent.critic, agent.target_critic));
  CHECK(agent.clip.low == doctest::Approx(-50.0));
  CHECK(agent.clip.high == doctest::Approx(50.0));
  CHECK_THROWS_AS(make_agent(0, DdpgHyper{}, RewardSpec{}, rng), std::invalid_argument);
  DdpgHyper bad;
  bad.gamma = 1.0;
  CHECK_THROWS_AS(make_agent(14, bad, RewardSpec{}, rng), std::invalid_argument);
}

TEST_CASE("running normalizer") {
  Rng rng(2);
  RunningNormalizer n(3);
  SUBCASE("identity before any update") {
    const double x[3] = {7.0, -8.0, 0.5};
    double out[3];
    n.normalize(x, out);
    CHECK(std::equal(x, x + 3, out));
  }
  SUBCASE("moments match a direct computation") {
    std::vector<std::vector<double>> samples;
    for (int i = 0; i < 200; ++i) {
      samples.push_back({uniform(rng, 0, 2), uniform(rng, -5, 5), 0.25});
      n.update(samples.back());
    }
    for (int d = 0; d < 3; ++d) {
      double mean = 0, sq = 0;
      for (const auto& s : samples) mean += s[d];
      mean /= samples.size();
      for (const auto& s : samples) sq += (s[d] - mean) * (s[d] - mean);
      const double std = std::max(std::sqrt(sq / samples.size()), 1e-2);
      CHECK(n.mean()[d] == doctest::Approx(mean).epsilon(1e-12));
      CHECK(n.std()[d] == doctest::Approx(std).epsilon(1e-6));
    }
    // Constant dimension: floored std, outputs clipped to the range.
    const double far[3] = {1.0, 0.0, 1.0};
    double out[3];
    n.normalize(far, out);
    CHECK(out[2] == 5.0);
  }
  SUBCASE("json round trip") {
    for (int i = 0; i < 10; ++i) n.update(random_features(rng, 3));
    const RunningNormalizer back =
        RunningNormalizer::from_json(nlohmann::json::parse(n.to_json().dump()));
    CHECK(back.count() == n.count());
    CHECK(back.mean() == n.mean());
    CHECK(back.std() == n.std());
  }
  SUBCASE("size mismatch") {
    CHECK_THROWS_AS(n.update(std::vector<double>{1, 2}), std::invalid_argument);
  }
}

TEST_CASE("act") {
  Rng rng(3);
  const DdpgAgent agent = make_agent(14, small_hyper(), RewardSpec{}, rng);
  Observation obs;
  obs.features = random_features(rng, 14);
  obs.desired_goal = random_vec(rng);

  Rng r1(1), r2(2);
  const Action a = act(agent, obs, false, r1);
  const Action b = act(agent, obs, false, r2);
  CHECK(a.dx == b.dx);
  CHECK(a.grip == b.grip);

  int random = 0;
  const int n = 5000;
  for (int i = 0; i < n; ++i) {
    bool took_random = false;
    const Action e = act(agent, obs, true, rng, &took_random);
    random += took_random;
    for (double v : {e.dx, e.dy, e.dz, e.grip}) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
  CHECK(static_cast<double>(random) / n == doctest::Approx(0.3).epsilon(0.1));

  Observation wrong = obs;
  wrong.features.pop_back();
  CHECK_THROWS_AS(act(agent, wrong, false, rng), std::invalid_argument);
}

TEST_CASE("train_batch") {
  Rng rng(4);
  DdpgAgent agent = make_agent(7, small_hyper(), RewardSpec{}, rng);
  const auto batch = random_batch(rng, 7, 32);

  SUBCASE("critic loss matches a recomputation and targets stay put") {
    const DdpgAgent before = agent;
    const double expected = critic_loss_oracle(agent, batch);
    const TrainLosses losses = train_batch(agent, batch);
    CHECK(losses.critic == doctest::Approx(expected).epsilon(1e-10));
    CHECK(same_params(agent.target_actor, before.target_actor));
    CHECK(same_params(agent.target_critic, before.target_critic));
    CHECK_FALSE(same_params(agent.actor, before.actor));
    CHECK_FALSE(same_params(agent.critic, before.critic));
  }
  SUBCASE("targets are clipped to the return range") {
    auto big = batch;
    for (auto& t : big) t.reward = 1e6;
    CHECK(critic_loss_oracle(agent, big) < 1e4);
    const double expected = critic_loss_oracle(agent, big);
    CHECK(train_batch(agent, big).critic == doctest::Approx(expected).epsilon(1e-10));
  }
  SUBCASE("repeated steps fit a fixed batch") {
    const double first = train_batch(agent, batch).critic;
    double last = first;
    for (int i = 0; i < 200; ++i) last = train_batch(agent, batch).critic;
    CHECK(last < 0.5 * first);
  }
  SUBCASE("non-finite reward halts before any update") {
    auto bad = batch;
    bad[3].reward = std::numeric_limits<double>::quiet_NaN();
    const DdpgAgent before = agent;
    CHECK_THROWS_AS(train_batch(agent, bad), std::runtime_error);
    CHECK(same_params(agent.critic, before.critic));
    CHECK(agent.critic_adam.step_count == 0);
  }
  SUBCASE("empty batch") {
    CHECK_THROWS_AS(train_batch(agent, std::vector<Transition>{}), std::invalid_argument);
  }
}

TEST_CASE("update_targets is polyak averaging") {
  Rng rng(5);
  DdpgAgent agent = make_agent(7, small_hyper(), RewardSpec{}, rng);
  train_batch(agent, random_batch(rng, 7, 16));
  const DdpgAgent before = agent;
  update_targets(agent);
  for (int l = 0; l < agent.actor.num_layers(); ++l) {
    const Eigen::MatrixXd expected = 0.95 * before.target_actor.weights[l] +
                                     0.05 * before.actor.weights[l];
    CHECK((agent.target_actor.weights[l] - expected).cwiseAbs().maxCoeff() <= 1e-15);
  }
  agent.hyper.polyak = 0.0;
  update_targets(agent);
  CHECK(same_params(agent.target_critic, agent.critic));
}

TEST_CASE("agent json round trip") {
  Rng rng(6);
  DdpgAgent agent = make_agent(14, small_hyper(), RewardSpec{}, rng);
  agent.normalizer.features.update(random_features(rng, 14));
  train_batch(agent, random_batch(rng, 14, 8));
  const DdpgAgent back = agent_from_json(nlohmann::json::parse(agent_to_json(agent).dump()));
  CHECK(same_params(back.actor, agent.actor));
  CHECK(same_params(back.critic, agent.critic));
  CHECK(same_params(back.target_actor, agent.target_actor));
  CHECK(back.critic_adam.step_count == agent.critic_adam.step_count);
  CHECK(back.normalizer.features.mean() == agent.normalizer.features.mean());
  CHECK(back.hyper.hidden_sizes == agent.hyper.hidden_sizes);
  CHECK(agent_to_json(back).dump() == agent_to_json(agent).dump());

  nlohmann::json j = agent_to_json(agent);
  j["feature_size"] = 7;
  CHECK_THROWS_AS(agent_from_json(j), std::invalid_argument);
}

TEST_CASE("greedy actions of a fresh agent lie strictly inside the box") {
  Rng rng(7);
  const DdpgAgent agent = make_agent(14, DdpgHyper{}, RewardSpec{}, rng);
  for (int i = 0; i < 200; ++i) {
    Observation obs;
    obs.features = random_features(rng, 14);
    obs.desired_goal = random_vec(rng);
    const Action a = act(agent, obs, false, rng);
    for (double v : {a.dx, a.dy, a.dz, a.grip}) {
      CHECK(v > -1.0);
      CHECK(v < 1.0);
    }
  }
}
