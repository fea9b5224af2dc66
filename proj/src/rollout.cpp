#include "misgen/rollout.hpp"

#include <cstring>

#include "misgen/distributions.hpp"

namespace misgen::train {

void RolloutBuffer::resize(int t, int n, int od, int id) {
  t_len = t;
  n_envs = n;
  obs_dim = od;
  inv_dim = id;
  const size_t tn = static_cast<size_t>(t) * n;
  obs.assign(tn * od, 0);
  inventory.assign(tn * id, 0);
  actions.assign(tn, 0);
  rewards_raw.assign(tn, 0);
  rewards_norm.assign(tn, 0);
  dones.assign(tn, 0);
  values.assign(tn, 0);
  logp.assign(tn, 0);
  bootstrap_values.assign(static_cast<size_t>(n), 0);
  episode_returns.clear();
  episode_lengths.clear();
}

namespace {

void write_obs_row(RolloutBuffer& buf, size_t row, const env::Observation& o) {
  std::memcpy(buf.obs.data() + row * buf.obs_dim, o.planes.ptr(), sizeof(float) * static_cast<size_t>(buf.obs_dim));
  std::memcpy(buf.inventory.data() + row * buf.inv_dim, o.inventory.data(),
              sizeof(float) * static_cast<size_t>(buf.inv_dim));
}

}  // namespace

void collect_rollout(const num::ParamSet<float>& params, env::VecEnv& envs,
                     std::vector<env::Observation>& current_obs, num::RngStream& action_rng,
                     int t_len, RewardNormalizer* normalizer, EpisodeTracker& tracker,
                     RolloutBuffer& out) {
  const int n = envs.size();
  const int obs_dim = params.arch.in_channels * params.arch.spatial();
  const int a_cnt = params.arch.action_count;
  out.resize(t_len, n, obs_dim, params.arch.inventory_dim);

  num::NetScratch<float> scratch;
  num::Tensor<float> logits({n, a_cnt});
  std::vector<float> step_values(static_cast<size_t>(n));
  std::vector<float> step_logp(static_cast<size_t>(n)), step_ent(static_cast<size_t>(n));
  std::vector<int> step_actions(static_cast<size_t>(n));

  for (int t = 0; t < t_len; ++t) {
    const size_t row0 = static_cast<size_t>(t) * n;
    for (int i = 0; i < n; ++i) write_obs_row(out, row0 + static_cast<size_t>(i), current_obs[static_cast<size_t>(i)]);

    num::PpoBatch<float> view;
    view.obs_base = out.obs.data() + row0 * obs_dim;
    view.inventory_base = out.inventory.data() + row0 * out.inv_dim;
    view.batch = n;
    num::forward_into(params, view, scratch, logits.ptr(), step_values.data());

    for (int i = 0; i < n; ++i) {
      std::span<const float> row(logits.ptr() + static_cast<int64_t>(i) * a_cnt, static_cast<size_t>(a_cnt));
      step_actions[static_cast<size_t>(i)] = num::categorical_sample(row, action_rng);
    }
    num::log_prob_entropy(logits, std::span<const int>(step_actions), std::span<float>(step_logp),
                          std::span<float>(step_ent));

    std::vector<env::StepResult> results = envs.step(step_actions);
    for (int i = 0; i < n; ++i) {
      const size_t idx = row0 + static_cast<size_t>(i);
      out.actions[idx] = step_actions[static_cast<size_t>(i)];
      out.values[idx] = step_values[static_cast<size_t>(i)];
      out.logp[idx] = step_logp[static_cast<size_t>(i)];
      out.rewards_raw[idx] = results[static_cast<size_t>(i)].reward;
      out.dones[idx] = results[static_cast<size_t>(i)].done ? 1 : 0;
      current_obs[static_cast<size_t>(i)] = std::move(results[static_cast<size_t>(i)].observation);

      tracker.ret[static_cast<size_t>(i)] += results[static_cast<size_t>(i)].reward;
      tracker.len[static_cast<size_t>(i)]++;
      if (results[static_cast<size_t>(i)].done) {
        out.episode_returns.push_back(static_cast<float>(tracker.ret[static_cast<size_t>(i)]));
        out.episode_lengths.push_back(tracker.len[static_cast<size_t>(i)]);
        tracker.ret[static_cast<size_t>(i)] = 0;
        tracker.len[static_cast<size_t>(i)] = 0;
      }
    }
    if (normalizer)
      normalizer->update(std::span<const float>(out.rewards_raw).subspan(row0, static_cast<size_t>(n)),
                         std::span<const uint8_t>(out.dones).subspan(row0, static_cast<size_t>(n)));
  }

  // bootstrap values for step T
  {
    std::vector<float> final_obs(static_cast<size_t>(n) * obs_dim);
    std::vector<float> final_inv(static_cast<size_t>(n) * out.inv_dim);
    for (int i = 0; i < n; ++i) {
      std::memcpy(final_obs.data() + static_cast<size_t>(i) * obs_dim, current_obs[static_cast<size_t>(i)].planes.ptr(),
                  sizeof(float) * static_cast<size_t>(obs_dim));
      std::memcpy(final_inv.data() + static_cast<size_t>(i) * out.inv_dim,
                  current_obs[static_cast<size_t>(i)].inventory.data(), sizeof(float) * static_cast<size_t>(out.inv_dim));
    }
    num::PpoBatch<float> view;
    view.obs_base = final_obs.data();
    view.inventory_base = final_inv.data();
    view.batch = n;
    num::Tensor<float> boot_logits({n, a_cnt});
    num::forward_into(params, view, scratch, boot_logits.ptr(), out.bootstrap_values.data());
  }

  // raw rewards retained; scaled copy feeds GAE
  if (normalizer) {
    for (size_t i = 0; i < out.rewards_raw.size(); ++i)
      out.rewards_norm[i] = normalizer->normalize(out.rewards_raw[i]);
  } else {
    out.rewards_norm = out.rewards_raw;
  }
}

}  // namespace misgen::train
