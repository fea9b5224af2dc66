#include "misgen/ppo.hpp"

#include <numeric>
#include <stdexcept>

namespace misgen::train {

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("TrainConfig: " + m); };
  if (gamma <= 0 || gamma > 1) fail("gamma must be in (0,1]");
  if (lambda <= 0 || lambda > 1) fail("lambda must be in (0,1]");
  if (clip_range <= 0) fail("clip_range must be positive");
  if (entropy_coef < 0) fail("entropy_coef must be nonnegative");
  if (lr <= 0) fail("lr must be positive");
  if (value_coef < 0) fail("value_coef must be nonnegative");
  if (rollout_len <= 0 || num_envs <= 0) fail("rollout geometry must be positive");
  if (epochs <= 0 || minibatches <= 0) fail("epochs/minibatches must be positive");
  if ((static_cast<int64_t>(rollout_len) * num_envs) % minibatches != 0)
    fail("T*N must be divisible by the minibatch count");
  if (total_timesteps <= 0) fail("total_timesteps must be positive");
}

void normalize_inplace(std::span<float> v) {
  if (v.empty()) return;
  double mean = 0;
  for (float x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0;
  for (float x : v) {
    const double d = x - mean;
    var += d * d;
  }
  const double inv_std = 1.0 / (std::sqrt(var / static_cast<double>(v.size())) + 1e-8);
  for (float& x : v) x = static_cast<float>((x - mean) * inv_std);
}

UpdateStats ppo_update(num::ParamSet<float>& params, num::AdamState<float>& adam,
                       const RolloutBuffer& buffer, std::span<const float> advantages,
                       std::span<const float> targets, const TrainConfig& cfg,
                       num::RngStream& shuffle_rng, UpdateWorkspace& ws) {
  const int b_total = buffer.batch();
  const int mb_size = b_total / cfg.minibatches;

  if (ws.order.size() != static_cast<size_t>(b_total)) {
    ws.order.resize(static_cast<size_t>(b_total));
  }
  std::iota(ws.order.begin(), ws.order.end(), 0);
  if (ws.grads.arch != params.arch) ws.grads = num::ParamSet<float>::zeros(params.arch);
  ws.mb_actions.resize(static_cast<size_t>(mb_size));
  ws.mb_old_logp.resize(static_cast<size_t>(mb_size));
  ws.mb_adv.resize(static_cast<size_t>(mb_size));
  ws.mb_targets.resize(static_cast<size_t>(mb_size));

  num::LossCoeffs coeffs;
  coeffs.clip_eps = cfg.clip_range;
  coeffs.value_coef = cfg.value_coef;
  coeffs.entropy_coef = cfg.entropy_coef;

  UpdateStats out;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // seeded minibatch partition
    for (size_t i = ws.order.size(); i > 1; --i)
      std::swap(ws.order[i - 1], ws.order[shuffle_rng.bounded(i)]);

    for (int mb = 0; mb < cfg.minibatches; ++mb) {
      const int* idx = ws.order.data() + static_cast<int64_t>(mb) * mb_size;

      // gather + per-minibatch advantage normalization (mean 0, std 1)
      for (int i = 0; i < mb_size; ++i) {
        const size_t s = static_cast<size_t>(idx[i]);
        ws.mb_actions[static_cast<size_t>(i)] = buffer.actions[s];
        ws.mb_old_logp[static_cast<size_t>(i)] = buffer.logp[s];
        ws.mb_adv[static_cast<size_t>(i)] = advantages[s];
        ws.mb_targets[static_cast<size_t>(i)] = targets[s];
      }
      normalize_inplace(ws.mb_adv);

      num::PpoBatch<float> view;
      view.obs_base = buffer.obs.data();
      view.inventory_base = buffer.inventory.data();
      view.indices = idx;
      view.actions = ws.mb_actions.data();
      view.old_logp = ws.mb_old_logp.data();
      view.advantages = ws.mb_adv.data();
      view.value_targets = ws.mb_targets.data();
      view.batch = mb_size;

      num::LossStats stats = num::ppo_loss_grad(params, view, coeffs, ws.grads, &ws.chunk_grads, &ws.scratch);
      num::adam_update(adam, params, ws.grads);

      if (out.updates == 0) out.first_minibatch_max_ratio_dev = stats.max_ratio_dev;
      out.mean.accumulate(stats);
      out.updates++;
    }
  }
  const double inv_u = 1.0 / std::max(out.updates, 1);
  out.mean.loss_total *= inv_u;
  out.mean.loss_policy *= inv_u;
  out.mean.loss_value *= inv_u;
  out.mean.entropy *= inv_u;
  out.mean.kl *= inv_u;
  out.mean.clip_frac *= inv_u;
  return out;
}

TrainState train(const TrainConfig& cfg, Family family, const ShiftConfig& shift,
                 const TrainSinks& sinks) {
  cfg.validate();
  if (shift.family != family) throw std::invalid_argument("train: shift config family mismatch");

  const num::ArchDesc arch = env::arch_for(family);
  num::RngStream init_rng(cfg.seed, num::kStreamInit);
  num::RngStream action_rng(cfg.seed, num::kStreamTrain);
  num::RngStream shuffle_rng(cfg.seed, num::kStreamShuffle);

  TrainState st;
  st.family = family;
  st.shift = shift;
  st.seed = cfg.seed;
  st.params = num::init_params<float>(arch, init_rng);
  st.adam = num::AdamState<float>::init(arch, cfg.lr);

  env::VecEnv envs(family, shift, cfg.num_envs, num::RngStream(cfg.seed, num::kStreamEnvResets));
  std::vector<env::Observation> current_obs = envs.observe();
  std::optional<RewardNormalizer> normalizer;
  if (cfg.reward_norm) normalizer.emplace(cfg.num_envs, cfg.gamma);
  EpisodeTracker tracker(cfg.num_envs);

  RolloutBuffer buffer;
  UpdateWorkspace ws;
  std::vector<float> advantages, vtargets;
  std::deque<float> ret_window;
  std::deque<int> len_window;

  const int64_t steps_per_iter = static_cast<int64_t>(cfg.rollout_len) * cfg.num_envs;
  const int64_t iters = (cfg.total_timesteps + steps_per_iter - 1) / steps_per_iter;

  for (int64_t it = 0; it < iters; ++it) {
    collect_rollout(st.params, envs, current_obs, action_rng, cfg.rollout_len,
                    normalizer ? &*normalizer : nullptr, tracker, buffer);

    advantages.assign(static_cast<size_t>(buffer.batch()), 0);
    vtargets.assign(static_cast<size_t>(buffer.batch()), 0);
    compute_gae<float>(buffer.rewards_norm, buffer.values, buffer.bootstrap_values, buffer.dones,
                       buffer.t_len, buffer.n_envs, static_cast<float>(cfg.gamma),
                       static_cast<float>(cfg.lambda), advantages, vtargets);

    UpdateStats up = ppo_update(st.params, st.adam, buffer, advantages, vtargets, cfg, shuffle_rng, ws);

    st.env_steps += steps_per_iter;
    st.action_counter = action_rng.counter();
    st.reset_counter = envs.reset_counter();
    st.shuffle_counter = shuffle_rng.counter();

    for (float r : buffer.episode_returns) {
      ret_window.push_back(r);
      if (ret_window.size() > 100) ret_window.pop_front();
    }
    for (int l : buffer.episode_lengths) {
      len_window.push_back(l);
      if (len_window.size() > 100) len_window.pop_front();
    }
    if (sinks.on_metrics) {
      MetricsRecord rec;
      rec.step = st.env_steps;
      rec.mean_return =
          ret_window.empty() ? 0.0 : std::accumulate(ret_window.begin(), ret_window.end(), 0.0) / ret_window.size();
      rec.mean_length =
          len_window.empty() ? 0.0 : std::accumulate(len_window.begin(), len_window.end(), 0.0) / len_window.size();
      rec.loss_policy = up.mean.loss_policy;
      rec.loss_value = up.mean.loss_value;
      rec.entropy = up.mean.entropy;
      rec.kl_estimate = up.mean.kl;
      sinks.on_metrics(rec);
    }
    if (sinks.on_checkpoint && cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0 &&
        it + 1 < iters)
      sinks.on_checkpoint(st);
  }
  if (sinks.on_checkpoint) sinks.on_checkpoint(st);
  return st;
}

}  // namespace misgen::train
