#pragma once

#include <deque>
#include <vector>

#include "misgen/env.hpp"
#include "misgen/running_stat.hpp"

namespace misgen::train {

// T x N trajectory storage feeding GAE and the clipped PPO update.
// All [t][n] arrays are row-major; log-probs are the sampling-time values.
struct RolloutBuffer {
  int t_len = 0, n_envs = 0, obs_dim = 0, inv_dim = 0;
  std::vector<float> obs;           // [T][N][obs_dim]
  std::vector<float> inventory;     // [T][N][inv_dim]
  std::vector<int> actions;         // [T][N]
  std::vector<float> rewards_raw;   // [T][N]
  std::vector<float> rewards_norm;  // [T][N]
  std::vector<uint8_t> dones;       // [T][N]
  std::vector<float> values;        // [T][N]
  std::vector<float> logp;          // [T][N]
  std::vector<float> bootstrap_values;  // [N]

  // raw returns/lengths of episodes completed during collection
  std::vector<float> episode_returns;
  std::vector<int> episode_lengths;

  int batch() const { return t_len * n_envs; }
  void resize(int t, int n, int od, int id);
};

// Per-env raw-return/length accumulators surviving across rollouts.
struct EpisodeTracker {
  std::vector<double> ret;
  std::vector<int> len;
  explicit EpisodeTracker(int n) : ret(static_cast<size_t>(n), 0.0), len(static_cast<size_t>(n), 0) {}
};

// Steps the vectorized env T times sampling from the current policy.
// Updates `normalizer` with the discounted-return stream, then fills
// rewards_norm with the post-batch scaling (identity when normalizer is
// null). Deterministic given the rng state.
void collect_rollout(const num::ParamSet<float>& params, env::VecEnv& envs,
                     std::vector<env::Observation>& current_obs, num::RngStream& action_rng,
                     int t_len, RewardNormalizer* normalizer, EpisodeTracker& tracker,
                     RolloutBuffer& out);

}  // namespace misgen::train
