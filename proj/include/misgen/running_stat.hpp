#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace misgen::train {

// Streaming mean/variance (Welford). merge() matches the stat of the
// concatenated stream to floating-point accuracy.
class RunningStat {
 public:
  void push(double x) {
    count_++;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(count_);
    m2_ += d * (x - mean_);
  }

  void merge(const RunningStat& o) {
    if (o.count_ == 0) return;
    if (count_ == 0) {
      *this = o;
      return;
    }
    const double n1 = static_cast<double>(count_), n2 = static_cast<double>(o.count_);
    const double delta = o.mean_ - mean_;
    mean_ += delta * n2 / (n1 + n2);
    m2_ += o.m2_ + delta * delta * n1 * n2 / (n1 + n2);
    count_ += o.count_;
  }

  int64_t count() const { return count_; }
  double mean() const { return mean_; }
  double variance() const { return count_ > 0 ? std::max(m2_, 0.0) / static_cast<double>(count_) : 0.0; }
  double std() const { return std::sqrt(variance()); }

 private:
  int64_t count_ = 0;
  double mean_ = 0;
  double m2_ = 0;
};

// Reward scaling per the Procgen-era convention: track the running std of
// per-env discounted returns, divide raw rewards by it (no mean
// subtraction), clip to [-10, 10]. Return accumulators reset at episode
// boundaries.
class RewardNormalizer {
 public:
  RewardNormalizer(int n_envs, double gamma) : gamma_(gamma), returns_(static_cast<size_t>(n_envs), 0.0) {}

  // One step of the batch stream; call in (t, env) order before scaling.
  void update(std::span<const float> rewards, std::span<const uint8_t> dones) {
    for (size_t i = 0; i < returns_.size(); ++i) {
      returns_[i] = gamma_ * returns_[i] + static_cast<double>(rewards[i]);
      stat_.push(returns_[i]);
      if (dones[i]) returns_[i] = 0.0;
    }
  }

  float normalize(float r) const {
    const double denom = std::max(stat_.std(), 1e-8);
    const double v = static_cast<double>(r) / denom;
    return static_cast<float>(std::clamp(v, -10.0, 10.0));
  }

  const RunningStat& stat() const { return stat_; }

 private:
  double gamma_;
  RunningStat stat_;
  std::vector<double> returns_;
};

}  // namespace misgen::train
