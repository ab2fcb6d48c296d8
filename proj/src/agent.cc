#include "shaped_pick/agent.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "shaped_pick/config.h"

namespace shaped_pick {

void DdpgHyper::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("hyper.") + what);
  };
  require(gamma > 0 && gamma < 1, "gamma must lie in (0,1)");
  require(polyak >= 0 && polyak <= 1, "polyak must lie in [0,1]");
  require(actor_lr > 0 && critic_lr > 0, "learning rates must be positive");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(random_action_probability >= 0 && random_action_probability <= 1,
          "random_action_probability must lie in [0,1]");
  require(gaussian_noise_scale >= 0, "gaussian_noise_scale must be >= 0");
  require(!hidden_sizes.empty(), "hidden_sizes must not be empty");
  for (int h : hidden_sizes) require(h >= 1, "hidden_sizes must be >= 1");
}

// --- RunningNormalizer ---

RunningNormalizer::RunningNormalizer(int size, double clip_range)
    : sum_(Eigen::VectorXd::Zero(size)),
      sum_sq_(Eigen::VectorXd::Zero(size)),
      mean_(Eigen::VectorXd::Zero(size)),
      std_(Eigen::VectorXd::Ones(size)),
      clip_range_(clip_range) {}

void RunningNormalizer::update(std::span<const double> x) {
  if (static_cast<int>(x.size()) != size()) {
    throw std::invalid_argument("normalizer: input size mismatch");
  }
  for (int i = 0; i < size(); ++i) {
    sum_[i] += x[i];
    sum_sq_[i] += x[i] * x[i];
  }
  count_ += 1.0;
  refresh();
}

void RunningNormalizer::refresh() {
  if (count_ <= 0) return;
  mean_ = sum_ / count_;
  const Eigen::VectorXd var =
      (sum_sq_ / count_ - mean_.cwiseProduct(mean_)).cwiseMax(0.0);
  std_ = var.cwiseSqrt().cwiseMax(kMinStd);
}

void RunningNormalizer::normalize(std::span<const double> x,
                                  double* out) const {
  if (static_cast<int>(x.size()) != size()) {
    throw std::invalid_argument("normalizer: input size mismatch");
  }
  if (count_ <= 0) {
    std::copy(x.begin(), x.end(), out);
    return;
  }
  for (int i = 0; i < size(); ++i) {
    out[i] = std::clamp((x[i] - mean_[i]) / std_[i], -clip_range_, clip_range_);
  }
}

nlohmann::json RunningNormalizer::to_json() const {
  return {{"sum", std::vector<double>(sum_.data(), sum_.data() + sum_.size())},
          {"sum_sq",
           std::vector<double>(sum_sq_.data(), sum_sq_.data() + sum_sq_.size())},
          {"count", count_},
          {"clip_range", clip_range_}};
}

RunningNormalizer RunningNormalizer::from_json(const nlohmann::json& j) {
  const auto sum = j.at("sum").get<std::vector<double>>();
  const auto sum_sq = j.at("sum_sq").get<std::vector<double>>();
  if (sum.size() != sum_sq.size()) {
    throw std::invalid_argument("normalizer: sum/sum_sq length mismatch");
  }
  RunningNormalizer n(static_cast<int>(sum.size()),
                      j.at("clip_range").get<double>());
  n.sum_ = Eigen::Map<const Eigen::VectorXd>(sum.data(), n.size());
  n.sum_sq_ = Eigen::Map<const Eigen::VectorXd>(sum_sq.data(), n.size());
  n.count_ = j.at("count").get<double>();
  n.refresh();
  return n;
}

// --- agent ---

DdpgAgent make_agent(int feature_size, const DdpgHyper& hyper,
                     const RewardSpec& reward, Rng& rng) {
  hyper.validate();
  if (feature_size < 1) throw std::invalid_argument("feature_size must be >= 1");
  DdpgAgent agent;
  agent.feature_size = feature_size;
  agent.hyper = hyper;
  agent.clip = {reward.living_cost / (1.0 - hyper.gamma),
                reward.success_reward / (1.0 - hyper.gamma)};

  std::vector<int> actor_sizes{agent.policy_input_size()};
  actor_sizes.insert(actor_sizes.end(), hyper.hidden_sizes.begin(),
                     hyper.hidden_sizes.end());
  actor_sizes.push_back(kActionSize);
  std::vector<int> critic_sizes{agent.critic_input_size()};
  critic_sizes.insert(critic_sizes.end(), hyper.hidden_sizes.begin(),
                      hyper.hidden_sizes.end());
  critic_sizes.push_back(1);

  agent.actor = nn::init_mlp(actor_sizes, nn::OutputActivation::kTanh, rng);
  agent.critic = nn::init_mlp(critic_sizes, nn::OutputActivation::kIdentity, rng);
  agent.target_actor = agent.actor;
  agent.target_critic = agent.critic;
  agent.actor_adam = nn::AdamState::for_params(agent.actor);
  agent.critic_adam = nn::AdamState::for_params(agent.critic);
  agent.normalizer.features = RunningNormalizer(feature_size);
  agent.normalizer.goal = RunningNormalizer(kGoalSize);
  return agent;
}

namespace {

void write_policy_input(const DdpgAgent& agent,
                        std::span<const double> features, const Vec3& goal,
                        double* out) {
  if (static_cast<int>(features.size()) != agent.feature_size) {
    throw std::invalid_argument(
        "agent expects " + std::to_string(agent.feature_size) +
        " observation features, got " + std::to_string(features.size()));
  }
  agent.normalizer.features.normalize(features, out);
  const double g[3] = {goal.x, goal.y, goal.z};
  agent.normalizer.goal.normalize(g, out + agent.feature_size);
}

double mean_of(const Eigen::MatrixXd& m) { return m.mean(); }

}  // namespace

std::vector<double> policy_input(const DdpgAgent& agent,
                                 std::span<const double> features,
                                 const Vec3& goal) {
  std::vector<double> x(static_cast<std::size_t>(agent.policy_input_size()));
  write_policy_input(agent, features, goal, x.data());
  return x;
}

Action act(const DdpgAgent& agent, const Observation& observation, bool explore,
           Rng& rng, bool* took_random) {
  if (took_random) *took_random = false;
  const std::vector<double> x =
      policy_input(agent, observation.features, observation.desired_goal);
  const std::vector<double> u = nn::forward(agent.actor, x);
  Action a{u[0], u[1], u[2], u[3]};
  if (!explore) return a;

  if (uniform(rng, 0.0, 1.0) < agent.hyper.random_action_probability) {
    if (took_random) *took_random = true;
    return {uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0),
            uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)};
  }
  std::normal_distribution<double> noise(0.0, agent.hyper.gaussian_noise_scale);
  a.dx += noise(rng);
  a.dy += noise(rng);
  a.dz += noise(rng);
  a.grip += noise(rng);
  return a.clamped();
}

TrainLosses train_batch(DdpgAgent& agent, std::span<const Transition> batch) {
  if (batch.empty()) throw std::invalid_argument("train_batch: empty batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  const int policy_in = agent.policy_input_size();

  // Rows [0, policy_in) hold s||g, the last four rows the action.
  Eigen::MatrixXd critic_in(agent.critic_input_size(), n);
  Eigen::MatrixXd next_policy_in(policy_in, n);
  Eigen::RowVectorXd reward(n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const Transition& tr = batch[static_cast<std::size_t>(b)];
    write_policy_input(agent, tr.observation_features, tr.goal,
                       critic_in.col(b).data());
    write_policy_input(agent, tr.next_observation_features, tr.goal,
                       next_policy_in.col(b).data());
    critic_in(policy_in + 0, b) = tr.action.dx;
    critic_in(policy_in + 1, b) = tr.action.dy;
    critic_in(policy_in + 2, b) = tr.action.dz;
    critic_in(policy_in + 3, b) = tr.action.grip;
    reward[b] = tr.reward;
  }

  // Bootstrapped target from the target networks.
  Eigen::MatrixXd next_critic_in(agent.critic_input_size(), n);
  next_critic_in.topRows(policy_in) = next_policy_in;
  next_critic_in.bottomRows(kActionSize) =
      nn::forward(agent.target_actor, next_policy_in);
  const Eigen::MatrixXd next_q = nn::forward(agent.target_critic, next_critic_in);
  Eigen::RowVectorXd target = reward + agent.hyper.gamma * next_q.row(0);
  if (agent.hyper.clip_return) {
    target = target.cwiseMax(agent.clip.low).cwiseMin(agent.clip.high);
  }

  nn::ForwardCache critic_cache;
  const Eigen::MatrixXd q = nn::forward(agent.critic, critic_in, &critic_cache);
  const Eigen::MatrixXd q_error = q.row(0) - target;
  const double critic_loss = q_error.squaredNorm() / static_cast<double>(n);
  const nn::MlpGradients critic_grad =
      nn::backward(agent.critic, critic_cache,
                   (2.0 / static_cast<double>(n)) * q_error)
          .params;

  // Actor: ascend Q(s||g, pi(s||g)) through the critic's action inputs.
  nn::ForwardCache actor_cache;
  Eigen::MatrixXd pi_critic_in = critic_in;
  pi_critic_in.bottomRows(kActionSize) =
      nn::forward(agent.actor, critic_in.topRows(policy_in), &actor_cache);
  nn::ForwardCache pi_cache;
  const Eigen::MatrixXd q_pi = nn::forward(agent.critic, pi_critic_in, &pi_cache);
  const double actor_loss = -mean_of(q_pi);
  const Eigen::MatrixXd dq = Eigen::MatrixXd::Constant(
      1, n, -1.0 / static_cast<double>(n));
  const Eigen::MatrixXd d_input = nn::input_gradient(agent.critic, pi_cache, dq);
  const nn::MlpGradients actor_grad =
      nn::backward(agent.actor, actor_cache, d_input.bottomRows(kActionSize))
          .params;

  if (!std::isfinite(critic_loss) || !std::isfinite(actor_loss)) {
    throw std::runtime_error("train_batch: non-finite loss (critic " +
                             std::to_string(critic_loss) + ", actor " +
                             std::to_string(actor_loss) + ")");
  }
  nn::adam_step(agent.critic, critic_grad, agent.critic_adam,
                agent.hyper.critic_lr);
  nn::adam_step(agent.actor, actor_grad, agent.actor_adam, agent.hyper.actor_lr);
  return {critic_loss, actor_loss};
}

namespace {

void soft_update(nn::MlpParams& target, const nn::MlpParams& main,
                 double polyak) {
  for (int l = 0; l < target.num_layers(); ++l) {
    target.weights[l] = polyak * target.weights[l] + (1.0 - polyak) * main.weights[l];
    target.biases[l] = polyak * target.biases[l] + (1.0 - polyak) * main.biases[l];
  }
}

}  // namespace

void update_targets(DdpgAgent& agent) {
  soft_update(agent.target_actor, agent.actor, agent.hyper.polyak);
  soft_update(agent.target_critic, agent.critic, agent.hyper.polyak);
}

void normalizer_update(Normalizer& normalizer, const EpisodeTrace& episode) {
  const double g[3] = {episode.goal.x, episode.goal.y, episode.goal.z};
  for (const auto& f : episode.features) {
    normalizer.features.update(f);
    normalizer.goal.update(g);
  }
}

nlohmann::json agent_to_json(const DdpgAgent& agent) {
  nlohmann::json j;
  j["feature_size"] = agent.feature_size;
  j["hyper"] = hyper_to_json(agent.hyper);
  j["return_clip"] = {agent.clip.low, agent.clip.high};
  j["actor"] = nn::to_json(agent.actor);
  j["critic"] = nn::to_json(agent.critic);
  j["target_actor"] = nn::to_json(agent.target_actor);
  j["target_critic"] = nn::to_json(agent.target_critic);
  j["actor_adam"] = nn::to_json(agent.actor_adam);
  j["critic_adam"] = nn::to_json(agent.critic_adam);
  j["normalizer"] = {{"features", agent.normalizer.features.to_json()},
                     {"goal", agent.normalizer.goal.to_json()}};
  return j;
}

DdpgAgent agent_from_json(const nlohmann::json& j) {
  DdpgAgent agent;
  agent.feature_size = j.at("feature_size").get<int>();
  agent.hyper = hyper_from_json(j.at("hyper"), /*clip_default=*/true);
  const auto clip = j.at("return_clip").get<std::vector<double>>();
  if (clip.size() != 2) throw std::invalid_argument("checkpoint: bad return_clip");
  agent.clip = {clip[0], clip[1]};
  agent.actor = nn::mlp_from_json(j.at("actor"));
  agent.critic = nn::mlp_from_json(j.at("critic"));
  agent.target_actor = nn::mlp_from_json(j.at("target_actor"));
  agent.target_critic = nn::mlp_from_json(j.at("target_critic"));
  agent.actor_adam = nn::adam_from_json(j.at("actor_adam"), agent.actor);
  agent.critic_adam = nn::adam_from_json(j.at("critic_adam"), agent.critic);
  agent.normalizer.features =
      RunningNormalizer::from_json(j.at("normalizer").at("features"));
  agent.normalizer.goal = RunningNormalizer::from_json(j.at("normalizer").at("goal"));

  if (agent.actor.input_size() != agent.policy_input_size() ||
      agent.actor.output_size() != kActionSize ||
      agent.critic.input_size() != agent.critic_input_size() ||
      agent.critic.output_size() != 1 ||
      !agent.target_actor.same_shape(agent.actor) ||
      !agent.target_critic.same_shape(agent.critic) ||
      agent.normalizer.features.size() != agent.feature_size ||
      agent.normalizer.goal.size() != kGoalSize) {
    throw std::invalid_argument("checkpoint: inconsistent network shapes");
  }
  return agent;
}

}  // namespace shaped_pick
