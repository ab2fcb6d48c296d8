#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "shaped_pick/env.h"
#include "shaped_pick/nn.h"
#include "shaped_pick/random.h"
#include "shaped_pick/replay.h"
#include "shaped_pick/trace.h"

namespace shaped_pick {

struct DdpgHyper {
  double gamma = 0.98;
  // Fraction of the target kept on each target update.
  double polyak = 0.95;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  int batch_size = 128;
  double random_action_probability = 0.3;
  double gaussian_noise_scale = 0.2;
  bool clip_return = true;
  std::vector<int> hidden_sizes{64, 64};

  void validate() const;
};

// Running per-dimension moments with clipped standardization.
class RunningNormalizer {
 public:
  static constexpr double kMinStd = 1e-2;

  explicit RunningNormalizer(int size = 0, double clip_range = 5.0);

  int size() const { return static_cast<int>(sum_.size()); }
  double count() const { return count_; }
  double clip_range() const { return clip_range_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  // Population standard deviation floored at kMinStd.
  const Eigen::VectorXd& std() const { return std_; }

  void update(std::span<const double> x);
  // Identity when no samples have been seen.
  void normalize(std::span<const double> x, double* out) const;

  nlohmann::json to_json() const;
  static RunningNormalizer from_json(const nlohmann::json& j);

 private:
  void refresh();

  Eigen::VectorXd sum_, sum_sq_, mean_, std_;
  double count_ = 0.0;
  double clip_range_ = 5.0;
};

struct Normalizer {
  RunningNormalizer features;
  RunningNormalizer goal;
};

// Bounds on the bootstrapped critic target.
struct ReturnClip {
  double low = -50.0;
  double high = 50.0;
};

struct DdpgAgent {
  int feature_size = 0;
  DdpgHyper hyper;
  ReturnClip clip;
  nn::MlpParams actor, critic, target_actor, target_critic;
  nn::AdamState actor_adam, critic_adam;
  Normalizer normalizer;

  int policy_input_size() const { return feature_size + kGoalSize; }
  int critic_input_size() const { return policy_input_size() + kActionSize; }
};

// Fresh agent; targets start as exact copies. clip is derived from the
// reward's living cost and success reward: [living/(1-gamma), success/(1-gamma)].
DdpgAgent make_agent(int feature_size, const DdpgHyper& hyper,
                     const RewardSpec& reward, Rng& rng);

// Deterministic policy output, or with explore: a uniform random action with
// probability random_action_probability, else Gaussian-perturbed and clamped.
// `took_random` reports which exploration branch fired.
Action act(const DdpgAgent& agent, const Observation& observation, bool explore,
           Rng& rng, bool* took_random = nullptr);

struct TrainLosses {
  double critic = 0.0;
  double actor = 0.0;
};

// One Adam step for critic and actor; target networks are left untouched.
// Both gradients come from the pre-update networks. Throws
// std::runtime_error on a non-finite loss.
TrainLosses train_batch(DdpgAgent& agent, std::span<const Transition> batch);

void update_targets(DdpgAgent& agent);

void normalizer_update(Normalizer& normalizer, const EpisodeTrace& episode);

// Concatenated, normalized (features || goal).
std::vector<double> policy_input(const DdpgAgent& agent,
                                 std::span<const double> features,
                                 const Vec3& goal);

nlohmann::json agent_to_json(const DdpgAgent& agent);
DdpgAgent agent_from_json(const nlohmann::json& j);

}  // namespace shaped_pick
