#pragma once

#include <deque>
#include <functional>
#include <optional>

#include "misgen/adam.hpp"
#include "misgen/gae.hpp"
#include "misgen/rollout.hpp"

namespace misgen::train {

using env::Family;
using env::ShiftConfig;

struct TrainConfig {
  double gamma = 0.999;
  double lambda = 0.95;
  double clip_range = 0.2;
  double entropy_coef = 0.01;   // k_H
  double lr = 5e-4;
  double value_coef = 0.5;      // c_v
  int rollout_len = 256;        // T
  int epochs = 3;
  int minibatches = 8;
  int num_envs = 64;            // N
  int64_t total_timesteps = 2'000'000;
  bool reward_norm = true;
  uint64_t seed = 0;
  int checkpoint_every = 0;  // rollouts between checkpoints; 0 = final only

  void validate() const;  // throws std::invalid_argument
};

struct MetricsRecord {
  int64_t step = 0;
  double mean_return = 0, mean_length = 0;
  double loss_policy = 0, loss_value = 0, entropy = 0, kl_estimate = 0;
};

// Everything a checkpoint carries (MGC1; see docs/FORMATS.md).
struct TrainState {
  Family family = Family::coinrun;
  ShiftConfig shift;
  num::ParamSet<float> params;
  num::AdamState<float> adam;
  uint64_t seed = 0;
  int64_t env_steps = 0;
  uint64_t action_counter = 0, reset_counter = 0, shuffle_counter = 0;
};

struct TrainSinks {
  std::function<void(const MetricsRecord&)> on_metrics;
  std::function<void(const TrainState&)> on_checkpoint;
};

struct UpdateStats {
  num::LossStats mean;          // averaged over all minibatch updates
  double first_minibatch_max_ratio_dev = 0;
  int updates = 0;
};

// Reusable buffers for the update phase.
struct UpdateWorkspace {
  std::vector<num::ParamSet<float>> chunk_grads;
  std::vector<num::NetScratch<float>> scratch;
  num::ParamSet<float> grads;
  std::vector<int> order;
  std::vector<int> mb_actions;
  std::vector<float> mb_old_logp, mb_adv, mb_targets;
};

// Mean-0/std-1 normalization (population std, 1e-8 guard); applied to every
// minibatch's advantages before the surrogate.
void normalize_inplace(std::span<float> v);

// Clipped-surrogate PPO epochs over shuffled minibatches with per-minibatch
// advantage normalization; one Adam step per minibatch.
UpdateStats ppo_update(num::ParamSet<float>& params, num::AdamState<float>& adam,
                       const RolloutBuffer& buffer, std::span<const float> advantages,
                       std::span<const float> targets, const TrainConfig& cfg,
                       num::RngStream& shuffle_rng, UpdateWorkspace& ws);

// Full loop: collect -> normalize -> GAE -> update until total_timesteps.
TrainState train(const TrainConfig& cfg, Family family, const ShiftConfig& shift,
                 const TrainSinks& sinks = {});

}  // namespace misgen::train
