#include "shaped_pick/replay.h"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>

namespace shaped_pick {

std::string_view relabel_kind_name(RelabelKind kind) {
  switch (kind) {
    case RelabelKind::kFuture:
      return "future";
    case RelabelKind::kFinal:
      return "final";
    case RelabelKind::kEpisode:
      return "episode";
  }
  return "?";
}

RelabelKind relabel_kind_from_name(std::string_view name) {
  if (name == "future") return RelabelKind::kFuture;
  if (name == "final") return RelabelKind::kFinal;
  if (name == "episode") return RelabelKind::kEpisode;
  throw std::invalid_argument("unknown relabel strategy '" + std::string(name) +
                              "' (expected future, final or episode)");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) {
    throw std::invalid_argument("replay buffer capacity must be >= 1");
  }
}

void ReplayBuffer::push(Transition transition) {
  if (storage_.size() < capacity_) {
    storage_.push_back(std::move(transition));
  } else {
    storage_[head_] = std::move(transition);
  }
  head_ = (head_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("replay buffer index out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : head_;
  return storage_[(oldest + i) % capacity_];
}

std::vector<Transition> ReplayBuffer::sample_batch(std::size_t n,
                                                   Rng& rng) const {
  if (empty()) throw std::logic_error("sample_batch: replay buffer is empty");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<Transition> batch;
  batch.reserve(n);
  for (std::size_t i = 0; i < n; ++i) batch.push_back(storage_[pick(rng)]);
  return batch;
}

namespace {

// Steps whose achieved goal may replace the goal of step t.
std::vector<int> sample_goal_steps(const RelabelStrategy& strategy, int t,
                                   int steps, Rng& rng) {
  std::vector<int> chosen;
  switch (strategy.kind) {
    case RelabelKind::kFinal:
      chosen.assign(static_cast<std::size_t>(strategy.k), steps - 1);
      break;
    case RelabelKind::kEpisode: {
      std::uniform_int_distribution<int> pick(0, steps - 1);
      for (int i = 0; i < strategy.k; ++i) chosen.push_back(pick(rng));
      break;
    }
    case RelabelKind::kFuture: {
      // Partial Fisher-Yates over the strictly later steps.
      std::vector<int> later;
      for (int j = t + 1; j < steps; ++j) later.push_back(j);
      const int take = std::min<int>(strategy.k, static_cast<int>(later.size()));
      for (int i = 0; i < take; ++i) {
        std::uniform_int_distribution<int> pick(i, static_cast<int>(later.size()) - 1);
        std::swap(later[i], later[pick(rng)]);
        chosen.push_back(later[i]);
      }
      break;
    }
  }
  return chosen;
}

}  // namespace

std::size_t store_episode(ReplayBuffer& buffer, const EpisodeTrace& episode,
                          const RelabelStrategy& strategy,
                          const RewardSpec& spec, Rng& rng) {
  const int steps = episode.length();
  if (steps < 1) throw std::invalid_argument("store_episode: empty episode");
  if (strategy.k < 0) throw std::invalid_argument("store_episode: k must be >= 0");
  episode.validate();
  if (episode.features.size() != static_cast<std::size_t>(steps) + 1 ||
      episode.achieved_goals.size() != static_cast<std::size_t>(steps) + 1) {
    throw std::invalid_argument(
        "store_episode: episode lacks features or achieved goals");
  }

  std::size_t stored = 0;
  for (int t = 0; t < steps; ++t) {
    const auto i = static_cast<std::size_t>(t);
    Transition original;
    original.observation_features = episode.features[i];
    original.action = episode.actions[i];
    original.reward = episode.rewards[i];
    original.next_observation_features = episode.features[i + 1];
    original.goal = episode.goal;
    original.achieved_goal_next = episode.achieved_goals[i + 1];
    original.gripper_pos = episode.gripper_positions[i];
    original.next_gripper_pos = episode.gripper_positions[i + 1];
    original.success = episode.success_flags[i];

    buffer.push(original);
    ++stored;
    for (int source : sample_goal_steps(strategy, t, steps, rng)) {
      Transition copy = original;
      copy.goal = episode.achieved_goals[static_cast<std::size_t>(source) + 1];
      copy.goal_source_step = source;
      copy.reward = compute_reward(
          spec, {copy.next_gripper_pos, copy.achieved_goal_next, copy.goal});
      copy.success = is_success(copy.achieved_goal_next, copy.goal,
                                spec.success_threshold);
      buffer.push(std::move(copy));
      ++stored;
    }
  }
  return stored;
}

}  // namespace shaped_pick
