#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace misgen::worlds {

enum class Family : uint8_t { coinrun = 0, maze1 = 1, maze2 = 2, keyschests = 3 };

const char* family_name(Family f);
bool family_from_name(const std::string& name, Family& out);

enum class Tile : uint8_t { empty = 0, wall = 1, hazard = 2 };

enum class ObjectKind : uint8_t { coin = 0, cheese = 1, key = 2, chest = 3, composite = 4 };
enum class Color : uint8_t { none = 0, yellow = 1, red = 2 };
enum class Shape : uint8_t { none = 0, gem = 1, star = 2 };

struct Cell {
  int x = 0, y = 0;
  auto operator<=>(const Cell&) const = default;
};

struct ObjectSpec {
  ObjectKind kind = ObjectKind::coin;
  Color color = Color::none;
  Shape shape = Shape::none;
  Cell cell;
};

enum class CheeseMode : uint8_t { fixed_corner = 0, random = 1 };
enum class AmbiguityPhase : uint8_t { train_yellow_gem = 0, test_star_vs_gem = 1 };
enum class KeyChestRatio : uint8_t { chests_double = 0, keys_double = 1 };

// Per-family distribution-shift knobs; only the fields relevant to the
// family are read.
struct ShiftConfig {
  Family family = Family::coinrun;
  int coin_random_pct = 0;  // {0,1,2,5,10,100}
  CheeseMode cheese_mode = CheeseMode::fixed_corner;
  AmbiguityPhase ambiguity_phase = AmbiguityPhase::train_yellow_gem;
  KeyChestRatio keychest_ratio = KeyChestRatio::chests_double;

  bool operator==(const ShiftConfig&) const = default;
};

// Canonical test-time shift for each family.
ShiftConfig train_shift(Family f);
ShiftConfig test_shift(Family f);

struct LevelSpec {
  Family family = Family::coinrun;
  int width = 0, height = 0;
  std::vector<Tile> tiles;  // row-major, y * width + x
  std::vector<ObjectSpec> objects;
  Cell spawn;

  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  Tile at(int x, int y) const { return tiles[static_cast<size_t>(y) * width + x]; }
  Tile& at(int x, int y) { return tiles[static_cast<size_t>(y) * width + x]; }
  bool solid(int x, int y) const { return !in_bounds(x, y) || at(x, y) == Tile::wall; }
};

inline constexpr int kPlatformerWidth = 16;
inline constexpr int kPlatformerHeight = 10;
inline constexpr int kMazeCells = 5;                      // cells per side
inline constexpr int kMazeTiles = 2 * kMazeCells + 1;     // 11x11 wall-and-passage lattice

int max_steps(Family f);     // 512 platformer, 256 mazes
int action_count(Family f);  // 4 platformer (left,right,jump,noop), 5 maze (up,down,left,right,noop)
int grid_width(Family f);
int grid_height(Family f);

// Platformer actions.
enum : int { kActLeft = 0, kActRight = 1, kActJump = 2, kActNoopP = 3 };
// Maze actions.
enum : int { kActUp = 0, kActDown = 1, kActMazeLeft = 2, kActMazeRight = 3, kActNoopM = 4 };

}  // namespace misgen::worlds
