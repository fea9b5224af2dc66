#pragma once

#include <span>

namespace misgen::train {

// GAE(lambda): A_t = delta_t + gamma*lambda*(1-done_t)*A_{t+1},
// delta_t = r_t + gamma*(1-done_t)*V_{t+1} - V_t, value target = A_t + V_t.
// Arrays are [t][n] row-major; bootstrap supplies V at step T.
template <typename S>
void compute_gae(std::span<const S> rewards, std::span<const S> values, std::span<const S> bootstrap,
                 std::span<const uint8_t> dones, int t_len, int n_envs, S gamma, S lambda,
                 std::span<S> advantages, std::span<S> targets) {
  for (int n = 0; n < n_envs; ++n) {
    S acc = S(0);
    for (int t = t_len - 1; t >= 0; --t) {
      const size_t i = static_cast<size_t>(t) * n_envs + n;
      const S not_done = dones[i] ? S(0) : S(1);
      const S v_next = (t == t_len - 1) ? bootstrap[static_cast<size_t>(n)]
                                        : values[i + static_cast<size_t>(n_envs)];
      const S delta = rewards[i] + gamma * not_done * v_next - values[i];
      acc = delta + gamma * lambda * not_done * acc;
      advantages[i] = acc;
      targets[i] = acc + values[i];
    }
  }
}

}  // namespace misgen::train
