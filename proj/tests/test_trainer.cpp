#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numeric>

#include "misgen/checkpoint.hpp"
#include "misgen/distributions.hpp"
#include "misgen/metrics.hpp"
#include "misgen/ppo.hpp"

using namespace misgen;
using namespace misgen::train;
using misgen::num::RngStream;

TEST_CASE("running stat: merge equals the stat of the concatenation") {
  RngStream rng(1, 0);
  for (int trial = 0; trial < 20; ++trial) {
    RunningStat a, b, whole;
    const int na = 1 + static_cast<int>(rng.bounded(500)), nb = 1 + static_cast<int>(rng.bounded(500));
    for (int i = 0; i < na; ++i) {
      const double x = rng.normal() * 3 + 1;
      a.push(x);
      whole.push(x);
    }
    for (int i = 0; i < nb; ++i) {
      const double x = rng.normal() * 0.5 - 2;
      b.push(x);
      whole.push(x);
    }
    a.merge(b);
    CHECK(a.count() == whole.count());
    CHECK(std::abs(a.mean() - whole.mean()) < 1e-9);
    CHECK(std::abs(a.variance() - whole.variance()) < 1e-9);
    CHECK(a.variance() >= 0.0);
  }
}

TEST_CASE("normalize_rewards: zero history outputs zero (guarded denominator)") {
  RewardNormalizer norm(4, 0.99);
  std::vector<float> rewards(4, 0.0f);
  std::vector<uint8_t> dones(4, 0);
  for (int t = 0; t < 10; ++t) norm.update(rewards, dones);
  CHECK(norm.normalize(0.0f) == 0.0f);
}

TEST_CASE("normalize_rewards: scaling matches a direct two-pass oracle") {
  const double gamma = 0.99;
  RewardNormalizer norm(2, gamma);
  RngStream rng(5, 0);
  std::vector<double> stream;  // the discounted-return stream, rebuilt directly
  double acc0 = 0, acc1 = 0;
  for (int t = 0; t < 5000; ++t) {
    const float r0 = static_cast<float>(rng.uniform01()), r1 = static_cast<float>(rng.uniform01() * 3);
    const uint8_t d0 = rng.bounded(50) == 0, d1 = rng.bounded(70) == 0;
    std::vector<float> rewards = {r0, r1};
    std::vector<uint8_t> dones = {d0, d1};
    norm.update(rewards, dones);
    acc0 = gamma * acc0 + r0;
    stream.push_back(acc0);
    if (d0) acc0 = 0;
    acc1 = gamma * acc1 + r1;
    stream.push_back(acc1);
    if (d1) acc1 = 0;
  }
  const double mean = std::accumulate(stream.begin(), stream.end(), 0.0) / static_cast<double>(stream.size());
  double var = 0;
  for (double x : stream) var += (x - mean) * (x - mean);
  const double s = std::sqrt(var / static_cast<double>(stream.size()));
  CHECK(std::abs(norm.normalize(1.0f) - static_cast<float>(1.0 / s)) < 1e-6);
  // clipping
  CHECK(norm.normalize(static_cast<float>(100 * s)) == 10.0f);
  CHECK(norm.normalize(static_cast<float>(-100 * s)) == -10.0f);
}

TEST_CASE("normalize_rewards: scale invariance after warm-up") {
  const double gamma = 0.999;
  RewardNormalizer a(1, gamma), b(1, gamma);
  RngStream rng(6, 0);
  float last_a = 0, last_b = 0;
  for (int t = 0; t < 10000; ++t) {
    const float r = static_cast<float>(rng.uniform01() - 0.2);
    const uint8_t d = rng.bounded(100) == 0;
    std::vector<float> ra = {r}, rb = {10.0f * r};
    std::vector<uint8_t> dd = {d};
    a.update(ra, dd);
    b.update(rb, dd);
    last_a = a.normalize(r);
    last_b = b.normalize(10.0f * r);
  }
  CHECK(std::abs(last_a - last_b) < 0.01 * std::max(1.0f, std::abs(last_a)));
}

TEST_CASE("gae: lambda=0 collapses to the one-step TD residual") {
  const int t_len = 20, n = 3;
  RngStream rng(7, 0);
  std::vector<double> r(t_len * n), v(t_len * n), boot(n);
  std::vector<uint8_t> d(t_len * n, 0);
  for (auto& x : r) x = rng.normal();
  for (auto& x : v) x = rng.normal();
  for (auto& x : boot) x = rng.normal();
  for (auto& x : d) x = rng.bounded(6) == 0;
  std::vector<double> adv(t_len * n), tgt(t_len * n);
  compute_gae<double>(r, v, boot, d, t_len, n, 0.97, 0.0, adv, tgt);
  for (int t = 0; t < t_len; ++t)
    for (int i = 0; i < n; ++i) {
      const size_t k = static_cast<size_t>(t) * n + i;
      const double vn = d[k] ? 0.0 : (t == t_len - 1 ? boot[static_cast<size_t>(i)] : v[k + n]);
      const double delta = r[k] + 0.97 * vn - v[k];
      CHECK(adv[k] == doctest::Approx(delta).epsilon(1e-12));
      CHECK(tgt[k] == doctest::Approx(delta + v[k]).epsilon(1e-12));
    }
}

TEST_CASE("gae: gamma=1, lambda=1, V=0 gives undiscounted reward-to-go") {
  const int t_len = 12, n = 1;
  std::vector<double> r(t_len), v(t_len, 0.0), boot(1, 0.0);
  std::vector<uint8_t> d(t_len, 0);
  RngStream rng(8, 0);
  for (auto& x : r) x = rng.uniform01();
  std::vector<double> adv(t_len), tgt(t_len);
  compute_gae<double>(r, v, boot, d, t_len, n, 1.0, 1.0, adv, tgt);
  for (int t = 0; t < t_len; ++t) {
    double togo = 0;
    for (int k = t; k < t_len; ++k) togo += r[static_cast<size_t>(k)];
    CHECK(adv[static_cast<size_t>(t)] == doctest::Approx(togo).epsilon(1e-12));
  }
}

TEST_CASE("gae: matches the direct double-sum oracle to 1e-10") {
  const int t_len = 50, n = 4;
  const double gamma = 0.999, lambda = 0.95;
  RngStream rng(9, 0);
  std::vector<double> r(t_len * n), v(t_len * n), boot(n);
  std::vector<uint8_t> d(t_len * n, 0);
  for (auto& x : r) x = rng.normal();
  for (auto& x : v) x = rng.normal();
  for (auto& x : boot) x = rng.normal();
  for (auto& x : d) x = rng.bounded(8) == 0;
  std::vector<double> adv(t_len * n), tgt(t_len * n);
  compute_gae<double>(r, v, boot, d, t_len, n, gamma, lambda, adv, tgt);

  for (int i = 0; i < n; ++i)
    for (int t = 0; t < t_len; ++t) {
      // oracle: A_t = sum_l (gamma*lambda)^l delta_{t+l} prod_{j<l} (1-done_{t+j})
      double sum = 0, factor = 1;
      for (int l = 0; t + l < t_len && factor != 0.0; ++l) {
        const size_t k = static_cast<size_t>(t + l) * n + i;
        const double vn = d[k] ? 0.0 : (t + l == t_len - 1 ? boot[static_cast<size_t>(i)] : v[k + n]);
        const double delta = r[k] + gamma * vn - v[k];
        sum += factor * delta;
        factor *= gamma * lambda * (d[k] ? 0.0 : 1.0);
      }
      const size_t k = static_cast<size_t>(t) * n + i;
      CHECK(std::abs(adv[k] - sum) < 1e-10);
      CHECK(std::abs(tgt[k] - (sum + v[k])) < 1e-10);
    }
}

namespace {

RolloutBuffer tiny_rollout(env::Family fam, uint64_t seed, int t_len, int n, const num::ParamSet<float>& params) {
  env::ShiftConfig shift = worlds::train_shift(fam);
  env::VecEnv envs(fam, shift, n, RngStream(seed, num::kStreamEnvResets));
  std::vector<env::Observation> obs = envs.observe();
  RngStream action_rng(seed, num::kStreamTrain);
  RewardNormalizer norm(n, 0.999);
  EpisodeTracker tracker(n);
  RolloutBuffer buf;
  collect_rollout(params, envs, obs, action_rng, t_len, &norm, tracker, buf);
  return buf;
}

}  // namespace

TEST_CASE("collect_rollout: T=1, N=1 records exactly one transition") {
  const num::ArchDesc arch = env::arch_for(env::Family::maze1);
  RngStream init(3, num::kStreamInit);
  num::ParamSet<float> params = num::init_params<float>(arch, init);
  RolloutBuffer buf = tiny_rollout(env::Family::maze1, 3, 1, 1, params);
  CHECK(buf.batch() == 1);
  CHECK(buf.actions.size() == 1);
  CHECK(buf.bootstrap_values.size() == 1);
}

TEST_CASE("collect_rollout: near-one-hot policy records argmax actions") {
  const num::ArchDesc arch = env::arch_for(env::Family::maze1);
  num::ParamSet<float> params = num::ParamSet<float>::zeros(arch);
  params.policy_b.data[2] = 60.0f;  // logits constant across states
  RolloutBuffer buf = tiny_rollout(env::Family::maze1, 4, 16, 2, params);
  for (int a : buf.actions) CHECK(a == 2);
}

TEST_CASE("collect_rollout: identical seeds give bit-identical buffers") {
  const num::ArchDesc arch = env::arch_for(env::Family::coinrun);
  RngStream init(11, num::kStreamInit);
  num::ParamSet<float> params = num::init_params<float>(arch, init);
  RolloutBuffer a = tiny_rollout(env::Family::coinrun, 11, 32, 4, params);
  RolloutBuffer b = tiny_rollout(env::Family::coinrun, 11, 32, 4, params);
  CHECK(0 == std::memcmp(a.obs.data(), b.obs.data(), sizeof(float) * a.obs.size()));
  CHECK(a.actions == b.actions);
  CHECK(0 == std::memcmp(a.logp.data(), b.logp.data(), sizeof(float) * a.logp.size()));
  CHECK(0 == std::memcmp(a.values.data(), b.values.data(), sizeof(float) * a.values.size()));
  CHECK(a.rewards_raw == b.rewards_raw);
  CHECK(a.dones == b.dones);
}

TEST_CASE("normalize_inplace: every minibatch gets mean 0, std 1") {
  RngStream rng(13, 0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<float> v(256);
    for (auto& x : v) x = static_cast<float>(rng.normal() * 7 - 2);
    normalize_inplace(v);
    double mean = 0;
    for (float x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0;
    for (float x : v) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(v.size()));
    CHECK(std::abs(mean) < 1e-6);
    CHECK(std::abs(sd - 1.0) < 1e-4);
  }
}

TEST_CASE("ppo_update: ratio identity holds exactly before the first update") {
  const num::ArchDesc arch = env::arch_for(env::Family::maze1);
  RngStream init(21, num::kStreamInit);
  num::ParamSet<float> params = num::init_params<float>(arch, init);
  RolloutBuffer buf = tiny_rollout(env::Family::maze1, 21, 16, 8, params);

  TrainConfig cfg;
  cfg.rollout_len = 16;
  cfg.num_envs = 8;
  cfg.minibatches = 4;
  cfg.epochs = 1;
  cfg.total_timesteps = 128;
  std::vector<float> adv(static_cast<size_t>(buf.batch())), tgt(static_cast<size_t>(buf.batch()));
  compute_gae<float>(buf.rewards_norm, buf.values, buf.bootstrap_values, buf.dones, buf.t_len, buf.n_envs,
                     0.999f, 0.95f, adv, tgt);
  num::AdamState<float> adam = num::AdamState<float>::init(arch, cfg.lr);
  RngStream shuffle(21, num::kStreamShuffle);
  UpdateWorkspace ws;
  UpdateStats st = ppo_update(params, adam, buf, adv, tgt, cfg, shuffle, ws);
  CHECK(st.first_minibatch_max_ratio_dev < 1e-6);
  CHECK(st.updates == 4);
}

TEST_CASE("ppo loss: clipped positive-advantage sample contributes no policy gradient") {
  // one-sample batch, ratio forced above 1+eps by an old_logp far below current
  const num::ArchDesc arch{2, 3, 3, 1, 3, 2, 2, 4};
  RngStream prng(31, 900);
  num::ParamSet<float> params = num::ParamSet<float>::zeros(arch);
  params.for_each([&](const char* name, num::Tensor<float>& t) {
    if (std::string(name) != "value_w" && std::string(name) != "value_b")
      for (auto& v : t.data) v = static_cast<float>(prng.normal() * 0.3);
  });
  std::vector<float> obs(static_cast<size_t>(arch.in_channels) * arch.spatial());
  for (auto& v : obs) v = static_cast<float>(prng.uniform01());
  std::vector<float> inv = {0.5f};
  num::Tensor<float> obs_t({1, arch.in_channels, arch.height, arch.width}, obs);
  num::Tensor<float> inv_t({1, 1}, inv);
  auto fwd = num::forward(params, obs_t, inv_t);
  std::vector<int> act = {1};
  std::vector<float> lp(1), ent(1);
  num::log_prob_entropy(fwd.logits, std::span<const int>(act), std::span<float>(lp), std::span<float>(ent));

  num::PpoBatch<float> view;
  view.obs_base = obs.data();
  view.inventory_base = inv.data();
  view.actions = act.data();
  std::vector<float> old_logp = {lp[0] - 1.0f};  // ratio = e > 1.2
  std::vector<float> adv = {2.0f}, tgt = {0.0f};
  view.old_logp = old_logp.data();
  view.advantages = adv.data();
  view.value_targets = tgt.data();
  view.batch = 1;

  num::LossCoeffs k;
  k.entropy_coef = 0.0;
  k.value_coef = 0.0;  // isolate the policy term
  num::ParamSet<float> grads = num::ParamSet<float>::zeros(arch);
  num::LossStats st = num::ppo_loss_grad(params, view, k, grads);
  CHECK(st.clip_frac == 1.0);
  grads.for_each([](const char*, const num::Tensor<float>& t) {
    for (float v : t.data) CHECK(v == 0.0f);
  });
}

TEST_CASE("ppo_update: a positive-advantage action becomes more likely") {
  const num::ArchDesc arch = env::arch_for(env::Family::maze1);
  RngStream init(41, num::kStreamInit);
  num::ParamSet<float> params = num::init_params<float>(arch, init);
  RolloutBuffer buf = tiny_rollout(env::Family::maze1, 41, 8, 4, params);

  // hand-crafted advantages: +1 where action==0, else 0
  std::vector<float> adv(static_cast<size_t>(buf.batch()), 0.0f);
  std::vector<float> tgt(buf.values.begin(), buf.values.end());
  int hits = 0;
  for (int i = 0; i < buf.batch(); ++i)
    if (buf.actions[static_cast<size_t>(i)] == 0) {
      adv[static_cast<size_t>(i)] = 1.0f;
      hits++;
    }
  REQUIRE(hits > 0);

  auto mean_logp_action0 = [&](const num::ParamSet<float>& p) {
    num::PpoBatch<float> view;
    view.obs_base = buf.obs.data();
    view.inventory_base = buf.inventory.data();
    view.batch = buf.batch();
    num::NetScratch<float> scratch;
    num::Tensor<float> logits({buf.batch(), arch.action_count});
    std::vector<float> values(static_cast<size_t>(buf.batch()));
    num::forward_into(p, view, scratch, logits.ptr(), values.data());
    std::vector<int> zeros(static_cast<size_t>(buf.batch()), 0);
    std::vector<float> lp(static_cast<size_t>(buf.batch())), ent(static_cast<size_t>(buf.batch()));
    num::log_prob_entropy(logits, std::span<const int>(zeros), std::span<float>(lp), std::span<float>(ent));
    double m = 0;
    for (int i = 0; i < buf.batch(); ++i)
      if (buf.actions[static_cast<size_t>(i)] == 0) m += lp[static_cast<size_t>(i)];
    return m / hits;
  };

  const double before = mean_logp_action0(params);
  TrainConfig cfg;
  cfg.rollout_len = 8;
  cfg.num_envs = 4;
  cfg.minibatches = 1;
  cfg.epochs = 1;
  num::AdamState<float> adam = num::AdamState<float>::init(arch, cfg.lr);
  RngStream shuffle(41, num::kStreamShuffle);
  UpdateWorkspace ws;
  ppo_update(params, adam, buf, adv, tgt, cfg, shuffle, ws);
  const double after = mean_logp_action0(params);
  CHECK(after > before);
}

TEST_CASE("ppo_update: entropy pressure drives the policy toward uniform") {
  const num::ArchDesc arch = env::arch_for(env::Family::maze1);
  RngStream init(51, num::kStreamInit);
  num::ParamSet<float> params = num::init_params<float>(arch, init);
  // bias the policy away from uniform first
  params.policy_b.data[1] = 1.5f;

  TrainConfig cfg;
  cfg.rollout_len = 8;
  cfg.num_envs = 4;
  cfg.minibatches = 1;
  cfg.epochs = 1;
  cfg.entropy_coef = 0.01;
  cfg.value_coef = 0.0;
  cfg.lr = 1e-4;
  num::AdamState<float> adam = num::AdamState<float>::init(arch, cfg.lr);
  RngStream shuffle(51, num::kStreamShuffle);
  UpdateWorkspace ws;

  const double ln_a = std::log(static_cast<double>(arch.action_count));

  // fixed state set; old log-probs refreshed from the current policy each
  // iteration so every update starts at ratio 1
  RolloutBuffer buf = tiny_rollout(env::Family::maze1, 51, 8, 4, params);
  auto refresh_and_measure = [&](RolloutBuffer& b) {
    num::PpoBatch<float> view;
    view.obs_base = b.obs.data();
    view.inventory_base = b.inventory.data();
    view.batch = b.batch();
    num::NetScratch<float> scratch;
    num::Tensor<float> logits({b.batch(), arch.action_count});
    std::vector<float> values(static_cast<size_t>(b.batch()));
    num::forward_into(params, view, scratch, logits.ptr(), values.data());
    std::vector<float> lp(static_cast<size_t>(b.batch())), ent(static_cast<size_t>(b.batch()));
    num::log_prob_entropy(logits, std::span<const int>(b.actions), std::span<float>(lp),
                          std::span<float>(ent));
    b.logp.assign(lp.begin(), lp.end());
    double mean_ent = 0;
    for (float e : ent) mean_ent += e;
    return mean_ent / b.batch();
  };

  double prev = refresh_and_measure(buf);
  CHECK(prev < ln_a - 1e-2);  // the biased policy starts away from uniform
  bool reached = false;
  for (int iter = 0; iter < 4000 && !reached; ++iter) {
    std::vector<float> adv(static_cast<size_t>(buf.batch()), 0.0f);
    std::vector<float> tgt(buf.values.begin(), buf.values.end());
    ppo_update(params, adam, buf, adv, tgt, cfg, shuffle, ws);
    const double now = refresh_and_measure(buf);
    if (now < ln_a - 1e-3) CHECK(now > prev - 1e-9);
    prev = now;
    reached = now >= ln_a - 1e-3;
  }
  CHECK(reached);
}

TEST_CASE("train: total timesteps T*N runs exactly one rollout/update cycle") {
  TrainConfig cfg;
  cfg.rollout_len = 8;
  cfg.num_envs = 2;
  cfg.minibatches = 2;
  cfg.total_timesteps = 16;
  cfg.seed = 7;
  int metrics_count = 0, checkpoint_count = 0;
  TrainSinks sinks;
  sinks.on_metrics = [&](const MetricsRecord& r) {
    metrics_count++;
    CHECK(r.step == 16);
  };
  sinks.on_checkpoint = [&](const TrainState&) { checkpoint_count++; };
  TrainState st = misgen::train::train(cfg, env::Family::maze1, worlds::train_shift(env::Family::maze1), sinks);
  CHECK(metrics_count == 1);
  CHECK(checkpoint_count == 1);
  CHECK(st.env_steps == 16);
  CHECK(st.adam.t == 2 * 3);  // minibatches * epochs
}

TEST_CASE("train: identical config and seed give byte-identical checkpoints and metrics") {
  auto run = [] {
    TrainConfig cfg;
    cfg.rollout_len = 16;
    cfg.num_envs = 4;
    cfg.minibatches = 4;
    cfg.total_timesteps = 16 * 4 * 3;
    cfg.seed = 99;
    std::vector<uint8_t> ckpt_bytes;
    std::string metrics;
    TrainSinks sinks;
    sinks.on_metrics = [&](const MetricsRecord& r) { metrics += to_json(r).dump() + "\n"; };
    sinks.on_checkpoint = [&](const TrainState& st) { ckpt_bytes = to_mgc1(st); };
    misgen::train::train(cfg, env::Family::maze2, worlds::train_shift(env::Family::maze2), sinks);
    return std::pair{ckpt_bytes, metrics};
  };
  auto [c1, m1] = run();
  auto [c2, m2] = run();
  CHECK(c1 == c2);
  CHECK(m1 == m2);
  CHECK_FALSE(c1.empty());
}

TEST_CASE("checkpoint: MGC1 round-trip is byte-exact") {
  TrainConfig cfg;
  cfg.rollout_len = 8;
  cfg.num_envs = 2;
  cfg.minibatches = 2;
  cfg.total_timesteps = 32;
  cfg.seed = 15;
  TrainState st = misgen::train::train(cfg, env::Family::coinrun, worlds::train_shift(env::Family::coinrun), {});
  const std::vector<uint8_t> bytes = to_mgc1(st);
  TrainState re = from_mgc1(bytes);
  CHECK(to_mgc1(re) == bytes);
  CHECK(re.family == st.family);
  CHECK(re.env_steps == st.env_steps);
  CHECK(re.adam.t == st.adam.t);
  CHECK(re.action_counter == st.action_counter);

  std::vector<uint8_t> bad = bytes;
  bad[1] = 'X';
  CHECK_THROWS_WITH_AS(from_mgc1(bad), doctest::Contains("bad magic"), CheckpointError);
  std::vector<uint8_t> trunc(bytes.begin(), bytes.begin() + 40);
  CHECK_THROWS_AS(from_mgc1(trunc), CheckpointError);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.rollout_len = 10;
  cfg.num_envs = 3;
  cfg.minibatches = 4;  // 30 % 4 != 0
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("divisible"), std::invalid_argument);
  cfg.minibatches = 5;
  CHECK_NOTHROW(cfg.validate());
  cfg.gamma = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
