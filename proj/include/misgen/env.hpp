#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "misgen/level.hpp"
#include "misgen/net.hpp"
#include "misgen/tensor.hpp"
#include "misgen/worldgen.hpp"

namespace misgen::env {

using worlds::Cell;
using worlds::Family;
using worlds::LevelSpec;
using worlds::ShiftConfig;

// Observation plane order (one-hot occupancy; color and shape planes are
// set independently, so a composite object contributes one color bit and
// one shape bit at the same cell).
enum Plane : int {
  kPlaneWall = 0,
  kPlaneFloor = 1,
  kPlaneAgent = 2,
  kPlaneHazard = 3,
  kPlaneCoin = 4,
  kPlaneCheese = 5,
  kPlaneKey = 6,
  kPlaneChest = 7,
  kPlaneColorYellow = 8,
  kPlaneColorRed = 9,
  kPlaneShapeGem = 10,
  kPlaneShapeStar = 11,
  kPlaneCount = 12,
};

inline constexpr int kInventoryDim = 1;
inline constexpr float kInventoryScale = 8.0f;  // key count / 8

struct Observation {
  num::Tensor<float> planes;     // [C x H x W], values in {0, 1}
  std::vector<float> inventory;  // normalized key count
};

// Event tags carried by StepResult::info.
enum Tag : uint32_t {
  kTagCoinCollected = 1u << 0,
  kTagCheeseReached = 1u << 1,
  kTagStarReached = 1u << 2,
  kTagRedGemReached = 1u << 3,
  kTagKeyCollected = 1u << 4,
  kTagChestOpened = 1u << 5,
  kTagDied = 1u << 6,
  kTagReachedLevelEnd = 1u << 7,
  kTagTimeout = 1u << 8,
  kTagYellowGemReached = 1u << 9,  // the trained reward object of the ambiguity family
};
std::string tags_to_string(uint32_t tags);

inline constexpr uint32_t kTerminalTags =
    kTagCoinCollected | kTagCheeseReached | kTagStarReached | kTagRedGemReached | kTagDied |
    kTagReachedLevelEnd | kTagTimeout | kTagYellowGemReached;

struct StepResult {
  Observation observation;
  float reward = 0;
  bool done = false;
  uint32_t info = 0;
};

num::ArchDesc arch_for(Family f);

// Single environment instance: deterministic post-reset (all stochasticity
// lives in level generation), single-owner mutable.
class Env {
 public:
  static Env reset(Family family, uint64_t seed, const ShiftConfig& shift);
  // Wraps a hand-built level (tests and tooling); seed is advisory only.
  static Env from_level(LevelSpec level, uint64_t seed = 0);

  StepResult step(int action);  // throws if already done

  const LevelSpec& level() const { return level_; }
  const ShiftConfig& shift() const { return shift_; }
  uint64_t seed() const { return seed_; }
  Cell agent() const { return phys_.pos; }
  bool done() const { return done_; }
  int steps() const { return step_count_; }
  int keys_held() const { return inventory_keys_; }
  uint32_t terminal_tags() const { return terminal_tags_; }
  // object liveness parallel to level().objects
  const std::vector<uint8_t>& alive() const { return alive_; }

  Observation observe() const;

 private:
  LevelSpec level_;
  ShiftConfig shift_;
  uint64_t seed_ = 0;
  worlds::PhysState phys_;
  std::vector<uint8_t> alive_;
  int inventory_keys_ = 0;
  int chests_opened_ = 0;
  int keys_collected_ = 0;
  int step_count_ = 0;
  bool done_ = false;
  uint32_t terminal_tags_ = 0;

  friend class TranscriptRecorder;
  void touch(Cell c, float& reward, uint32_t& tags);
  bool keyschests_done() const;
};

// Vectorized stepping with auto-reset: a finished env is immediately reset
// with a fresh seed from the dedicated reset stream, and the StepResult
// carries the terminal transition's reward/tags with the new episode's
// first observation.
class VecEnv {
 public:
  VecEnv(Family family, const ShiftConfig& shift, int n, num::RngStream reset_stream);

  std::vector<StepResult> step(const std::vector<int>& actions);
  std::vector<Observation> observe() const;

  int size() const { return static_cast<int>(envs_.size()); }
  Family family() const { return family_; }
  const Env& env(int i) const { return envs_[static_cast<size_t>(i)]; }
  uint64_t reset_counter() const { return reset_stream_.counter(); }
  void set_reset_counter(uint64_t c) { reset_stream_.set_counter(c); }

 private:
  Family family_;
  ShiftConfig shift_;
  std::vector<Env> envs_;
  num::RngStream reset_stream_;
};

}  // namespace misgen::env
