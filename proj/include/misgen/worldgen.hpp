#pragma once

#include <optional>
#include <vector>

#include "misgen/level.hpp"
#include "misgen/maze.hpp"
#include "misgen/rng.hpp"

namespace misgen::worlds {

// Discrete-tick platformer motion state. jump_ticks counts remaining
// rising ticks; grounded implies jump_ticks == 0.
struct PhysState {
  Cell pos;
  int jump_ticks = 0;
  auto operator<=>(const PhysState&) const = default;
};

struct TickResult {
  PhysState state;
  Cell visited[2];  // cell after the horizontal sub-move, then vertical
  int visited_count = 0;
  bool died = false;
  bool hit_stop_cell = false;
};

bool grounded(const LevelSpec& level, Cell pos);

// One platformer tick: optional jump trigger, horizontal sub-move, then
// vertical sub-move (rise while jump_ticks > 0, else fall one cell).
// Motion stops early when a sub-move enters a hazard (died) or stop_at.
TickResult platformer_tick(const LevelSpec& level, PhysState s, int action,
                           const Cell* stop_at = nullptr);

// Maze tick: 4-direction move blocked by walls. Returns the new cell.
Cell maze_tick(const LevelSpec& level, Cell pos, int action);

// Movement-rule-respecting reachability (BFS; the platformer graph includes
// jump arcs and gravity, and treats hazards and the level-end column as
// absorbing). `to` counts as reached when any sub-move touches it.
bool path_exists(const LevelSpec& level, Cell from, Cell to);

// Platformer cells the agent can stand on (grounded end-of-tick states
// reachable from spawn), sorted row-major. Used for random coin placement.
std::vector<Cell> reachable_standing_cells(const LevelSpec& level);

// Maze helpers: tile coordinates of maze cell (cx, cy); the training
// corner is the upper-right cell.
Cell maze_cell_tile(int cx, int cy);
Cell maze_training_corner();

// Seed-deterministic level generation with internal regeneration of
// unsolvable draws (sub-seeded retries; never surfaced).
LevelSpec generate_level(uint64_t level_seed, const ShiftConfig& shift);

// Per-family generators driven by an explicit stream (exposed for tests).
LevelSpec gen_coinrun(num::RngStream& rng, const ShiftConfig& shift, bool coin_randomized);
LevelSpec gen_maze1(num::RngStream& rng, const ShiftConfig& shift);
LevelSpec gen_maze2(num::RngStream& rng, const ShiftConfig& shift);
LevelSpec gen_keyschests(num::RngStream& rng, const ShiftConfig& shift);

// The per-level Bernoulli draw deciding whether this level's coin is
// randomized (coin_random_pct percent of levels).
bool coin_randomized_for_seed(uint64_t level_seed, int coin_random_pct);

}  // namespace misgen::worlds
