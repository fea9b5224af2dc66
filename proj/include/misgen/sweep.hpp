#pragma once

#include "misgen/eval.hpp"

namespace misgen::evalkit {

// The coin-randomization ablation: train one agent per p, deploy each on
// the fully randomized test distribution, tabulate failure rates.
struct SweepSpec {
  std::vector<int> p_values = {0, 1, 2, 5, 10};
  int seeds_per_point = 1;
  int eval_episodes = 1000;
  int64_t train_timesteps = 2'000'000;
  train::TrainConfig base;  // seed, rollout geometry, coefficients
  EvalMode mode = EvalMode::stochastic;

  void validate() const;
};

struct SweepPoint {
  int p = 0;
  bool failed = false;
  std::string error;
  EvalReport report;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  bool any_failed = false;
};

using SweepProgress = std::function<void(const std::string&)>;

// Trains and evaluates every point, writing per-p artifacts plus a
// combined plot-ready CSV under out_dir. Per-point errors are recorded and
// the remaining points continue.
SweepResult run_ablation_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir,
                               const SweepProgress& progress = {});

void write_sweep_csv(const SweepResult& r, const std::filesystem::path& path);

}  // namespace misgen::evalkit
