#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "misgen/env.hpp"

namespace misgen::env {

struct TranscriptStep {
  int action = 0;
  float reward = 0;
  uint32_t tags = 0;
  Cell agent_after;  // derived, not serialized
};

// Complete replayable record of one episode: re-simulating (seed, shift,
// actions) reproduces every observation, reward and tag bit-for-bit.
struct EpisodeTranscript {
  Family family = Family::coinrun;
  uint64_t seed = 0;
  ShiftConfig shift;
  Cell spawn;  // derived
  std::vector<TranscriptStep> steps;
  uint32_t terminal_tags = 0;

  float total_reward() const {
    float r = 0;
    for (const auto& s : steps) r += s.reward;
    return r;
  }
  int length() const { return static_cast<int>(steps.size()); }
  bool has_tag(uint32_t tag) const {
    for (const auto& s : steps)
      if (s.tags & tag) return true;
    return false;
  }
  // index of the first step carrying any of `tags`, or -1
  int first_step_with(uint32_t tags) const {
    for (size_t i = 0; i < steps.size(); ++i)
      if (steps[i].tags & tags) return static_cast<int>(i);
    return -1;
  }
};

class TranscriptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// MGT1 serialization (byte layout in docs/FORMATS.md). Round trips are
// byte-exact; agent positions are re-derived by simulation on load.
std::vector<uint8_t> to_mgt1(const EpisodeTranscript& t);
void save_transcript(const EpisodeTranscript& t, const std::string& path);

// Parses and re-simulates. Stored rewards/tags must match the re-simulated
// episode exactly; any mismatch or truncation throws TranscriptError with
// a byte-offset diagnostic where applicable.
EpisodeTranscript from_mgt1(const std::vector<uint8_t>& bytes);
EpisodeTranscript load_transcript(const std::string& path);

// Re-simulates an action sequence into a full transcript.
EpisodeTranscript simulate(Family family, uint64_t seed, const ShiftConfig& shift,
                           const std::vector<int>& actions);

}  // namespace misgen::env
