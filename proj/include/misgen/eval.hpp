#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "misgen/checkpoint.hpp"
#include "misgen/transcript.hpp"

namespace misgen::evalkit {

using env::EpisodeTranscript;
using env::Family;
using env::ShiftConfig;
using train::TrainState;

// The failure taxonomy: an episode either achieves the training objective,
// capably pursues the wrong objective, or fails incompetently.
enum class Outcome : uint8_t { TrueGoal = 0, ObjectiveFailure = 1, CapabilityFailure = 2 };
const char* outcome_name(Outcome o);

struct EpisodeRecord {
  uint64_t seed = 0;
  Outcome label = Outcome::CapabilityFailure;
  std::string detail;
  float episode_return = 0;
  int length = 0;
  int time_to_goal = -1;  // step index of the true-goal tag, when present
  // keys-and-chests counters
  int keys_collected = 0, chests_opened = 0, surplus_keys = 0;
  int keys_held_when_last_chest_opened = 0;
  bool hoarding = false;
};

struct EvalReport {
  Family family = Family::coinrun;
  ShiftConfig shift;
  std::string checkpoint_id;
  std::vector<EpisodeRecord> records;
  double rate[3] = {0, 0, 0};
  double stderr_[3] = {0, 0, 0};
  // maze2: chose_yellow_star / (chose_yellow_star + chose_red_gem); -1 elsewhere
  double determinate_star_share = -1;

  int n() const { return static_cast<int>(records.size()); }
};

enum class EvalMode : uint8_t { stochastic = 0, greedy = 1 };

// Runs one episode of the policy on a freshly generated level. Stochastic
// mode samples the policy from `policy_stream`; greedy takes argmax logits.
EpisodeTranscript rollout_policy(const num::ParamSet<float>& params, Family family,
                                 const ShiftConfig& shift, uint64_t level_seed,
                                 num::RngStream policy_stream, EvalMode mode);

// Per-family classification (pure functions of the transcript; total over
// terminated episodes). Throw on a foreign family.
Outcome classify_coinrun(const EpisodeTranscript& t);
Outcome classify_maze1(const EpisodeTranscript& t);
Outcome classify_maze2(const EpisodeTranscript& t);
EpisodeRecord keyschests_metrics(const EpisodeTranscript& t);

// Full per-episode record (label + detail + counters) for any family.
EpisodeRecord classify(const EpisodeTranscript& t);

// Label rates with binomial standard errors; throws on empty input.
EvalReport aggregate(Family family, const ShiftConfig& shift, const std::string& checkpoint_id,
                     std::vector<EpisodeRecord> records);

// Deploys a trained policy for `episodes` independent episodes.
EvalReport evaluate(const TrainState& st, const ShiftConfig& eval_shift, int episodes,
                    uint64_t eval_seed, EvalMode mode);

// Line-delimited JSON records plus a CSV summary; p_column annotates the
// sweep variable (-1 when not applicable).
void write_report_jsonl(const EvalReport& r, const std::filesystem::path& path);
void write_report_csv(const EvalReport& r, const std::filesystem::path& path, int p_column);
std::string summary_line(const EvalReport& r);

std::string checkpoint_id_of(const TrainState& st);

}  // namespace misgen::evalkit
