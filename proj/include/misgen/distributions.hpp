#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include "misgen/rng.hpp"
#include "misgen/tensor.hpp"

namespace misgen::num {

// Samples an index from softmax(logits). Consumes one rng draw.
template <typename S>
int categorical_sample(std::span<const S> logits, RngStream& rng) {
  const int n = static_cast<int>(logits.size());
  S mx = logits[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
  double z = 0;
  for (int i = 0; i < n; ++i) z += std::exp(static_cast<double>(logits[i] - mx));
  const double target = rng.uniform01() * z;
  double cum = 0;
  for (int i = 0; i < n; ++i) {
    cum += std::exp(static_cast<double>(logits[i] - mx));
    if (target < cum) return i;
  }
  return n - 1;
}

// Row-wise log pi(a|s) and entropy for a [B x A] logits tensor.
template <typename S>
void log_prob_entropy(const Tensor<S>& logits, std::span<const int> actions,
                      std::span<S> log_probs, std::span<S> entropies) {
  require_shape(logits.shape.size() == 2, "log_prob_entropy: logits must be [B x A]");
  const int b = logits.dim(0), a = logits.dim(1);
  require_shape(static_cast<int>(actions.size()) == b && static_cast<int>(log_probs.size()) == b &&
                    static_cast<int>(entropies.size()) == b,
                "log_prob_entropy: length mismatch");
  for (int i = 0; i < b; ++i) {
    const S* row = logits.ptr() + static_cast<int64_t>(i) * a;
    if (actions[i] < 0 || actions[i] >= a) throw std::invalid_argument("log_prob_entropy: action out of range");
    S mx = row[0];
    for (int j = 1; j < a; ++j) mx = std::max(mx, row[j]);
    S z = 0;
    for (int j = 0; j < a; ++j) z += std::exp(row[j] - mx);
    const S log_z = std::log(z) + mx;
    log_probs[i] = row[actions[i]] - log_z;
    S h = 0;
    for (int j = 0; j < a; ++j) {
      const S lp = row[j] - log_z;
      h -= std::exp(lp) * lp;
    }
    entropies[i] = h;
  }
}

}  // namespace misgen::num
