#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "misgen/eval.hpp"
#include "misgen/sweep.hpp"

namespace misgen::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat key=value configuration with section prefixes (train.gamma=0.999).
// Unknown keys are rejected; '#' starts a comment; later assignments win.
struct RunConfig {
  worlds::Family family = worlds::Family::coinrun;
  bool family_set = false;
  uint64_t seed = 0;
  std::string out_dir;

  train::TrainConfig train;
  worlds::ShiftConfig shift;      // train-time shift; family filled from `family`
  bool shift_explicit = false;    // any shift.* key present
  int eval_episodes = 1000;
  evalkit::EvalMode eval_mode = evalkit::EvalMode::stochastic;

  evalkit::SweepSpec sweep;
};

// Parses file text plus --set overrides (applied in order) into a config.
RunConfig parse_config(const std::map<std::string, std::string>& entries);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);
void apply_override(std::map<std::string, std::string>& entries, const std::string& kv);

// Serializes the fully-resolved config; parsing it back reproduces the run.
std::string resolved_config_text(const RunConfig& cfg);

}  // namespace misgen::cli
