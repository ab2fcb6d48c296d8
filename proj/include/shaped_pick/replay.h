#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "shaped_pick/env.h"
#include "shaped_pick/random.h"
#include "shaped_pick/rewards.h"
#include "shaped_pick/trace.h"

namespace shaped_pick {

struct Transition {
  std::vector<double> observation_features;
  Action action;
  double reward = 0.0;
  std::vector<double> next_observation_features;
  Vec3 goal;
  Vec3 achieved_goal_next;
  Vec3 gripper_pos;
  Vec3 next_gripper_pos;
  bool success = false;
  // Step of the source episode whose achieved goal replaced the original
  // goal; -1 for the original transition.
  int goal_source_step = -1;
};

enum class RelabelKind { kFuture, kFinal, kEpisode };

std::string_view relabel_kind_name(RelabelKind kind);
RelabelKind relabel_kind_from_name(std::string_view name);

struct RelabelStrategy {
  RelabelKind kind = RelabelKind::kFuture;
  int k = 4;
};

// Flat ring of transitions; relabeled copies are materialized at store time.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 100000);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  void push(Transition transition);

  // i = 0 is the oldest stored transition.
  const Transition& at(std::size_t i) const;

  // Uniform with replacement. Throws std::logic_error when empty.
  std::vector<Transition> sample_batch(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next write slot
  std::size_t size_ = 0;
  std::vector<Transition> storage_;
};

// Stores every step of `episode` with its own goal plus HER copies whose goal
// is an achieved goal of the same episode and whose reward and success are
// recomputed under `spec`. Returns the number of transitions pushed.
// The future strategy draws min(k, steps remaining after t) distinct later
// steps, so the last step contributes only its original transition.
// Throws std::invalid_argument for an empty episode or negative k.
std::size_t store_episode(ReplayBuffer& buffer, const EpisodeTrace& episode,
                          const RelabelStrategy& strategy,
                          const RewardSpec& spec, Rng& rng);

}  // namespace shaped_pick
