#include "misgen/worldgen.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <stdexcept>

namespace misgen::worlds {

const char* family_name(Family f) {
  switch (f) {
    case Family::coinrun: return "coinrun";
    case Family::maze1: return "maze1";
    case Family::maze2: return "maze2";
    case Family::keyschests: return "keyschests";
  }
  return "?";
}

bool family_from_name(const std::string& name, Family& out) {
  for (Family f : {Family::coinrun, Family::maze1, Family::maze2, Family::keyschests}) {
    if (name == family_name(f)) {
      out = f;
      return true;
    }
  }
  return false;
}

ShiftConfig train_shift(Family f) {
  ShiftConfig s;
  s.family = f;
  s.coin_random_pct = 0;
  s.cheese_mode = CheeseMode::fixed_corner;
  s.ambiguity_phase = AmbiguityPhase::train_yellow_gem;
  s.keychest_ratio = KeyChestRatio::chests_double;
  return s;
}

ShiftConfig test_shift(Family f) {
  ShiftConfig s;
  s.family = f;
  s.coin_random_pct = 100;
  s.cheese_mode = CheeseMode::random;
  s.ambiguity_phase = AmbiguityPhase::test_star_vs_gem;
  s.keychest_ratio = KeyChestRatio::keys_double;
  return s;
}

int max_steps(Family f) { return f == Family::coinrun ? 512 : 256; }
int action_count(Family f) { return f == Family::coinrun ? 4 : 5; }
int grid_width(Family f) { return f == Family::coinrun ? kPlatformerWidth : kMazeTiles; }
int grid_height(Family f) { return f == Family::coinrun ? kPlatformerHeight : kMazeTiles; }

// ---------------------------------------------------------------------------
// Movement

bool grounded(const LevelSpec& level, Cell pos) {
  return level.solid(pos.x, pos.y + 1);
}

TickResult platformer_tick(const LevelSpec& level, PhysState s, int action, const Cell* stop_at) {
  TickResult r;
  r.state = s;

  auto enter = [&](Cell c) -> bool {  // returns true when motion must stop
    r.state.pos = c;
    r.visited[r.visited_count++] = c;
    if (level.at(c.x, c.y) == Tile::hazard) {
      r.died = true;
      return true;
    }
    if (stop_at && c == *stop_at) {
      r.hit_stop_cell = true;
      return true;
    }
    return false;
  };

  if (action == kActJump && grounded(level, r.state.pos)) r.state.jump_ticks = 2;

  // horizontal
  if (action == kActLeft || action == kActRight) {
    const int nx = r.state.pos.x + (action == kActRight ? 1 : -1);
    if (!level.solid(nx, r.state.pos.y)) {
      if (enter({nx, r.state.pos.y})) return r;
    }
  }

  // vertical
  if (r.state.jump_ticks > 0) {
    const int ny = r.state.pos.y - 1;
    if (!level.solid(r.state.pos.x, ny)) {
      r.state.jump_ticks--;
      if (enter({r.state.pos.x, ny})) return r;
    } else {
      r.state.jump_ticks = 0;  // bumped the ceiling
    }
  } else if (!grounded(level, r.state.pos)) {
    if (enter({r.state.pos.x, r.state.pos.y + 1})) return r;
  }

  if (grounded(level, r.state.pos)) r.state.jump_ticks = 0;
  return r;
}

Cell maze_tick(const LevelSpec& level, Cell pos, int action) {
  int dx = 0, dy = 0;
  switch (action) {
    case kActUp: dy = -1; break;
    case kActDown: dy = 1; break;
    case kActMazeLeft: dx = -1; break;
    case kActMazeRight: dx = 1; break;
    default: return pos;
  }
  const int nx = pos.x + dx, ny = pos.y + dy;
  if (level.solid(nx, ny)) return pos;
  return {nx, ny};
}

namespace {

bool at_level_end(const LevelSpec& level, Cell pos) {
  return pos.x == level.width - 1 && grounded(level, pos);
}

// BFS over platformer physics states. Visits end-of-tick states; hazards
// kill mid-tick and level-end states are absorbing. When `stop_at` is set,
// returns true as soon as any sub-move touches it; otherwise explores the
// full graph and reports every grounded end-of-tick cell via `standing`.
bool platformer_bfs(const LevelSpec& level, PhysState start, const Cell* stop_at,
                    std::set<Cell>* standing) {
  std::set<PhysState> seen;
  std::deque<PhysState> queue;
  if (stop_at && start.pos == *stop_at) return true;
  seen.insert(start);
  queue.push_back(start);
  if (standing && grounded(level, start.pos)) standing->insert(start.pos);
  while (!queue.empty()) {
    const PhysState s = queue.front();
    queue.pop_front();
    if (at_level_end(level, s.pos)) continue;  // terminal, not expanded
    for (int a = 0; a < 4; ++a) {
      TickResult t = platformer_tick(level, s, a, stop_at);
      if (t.hit_stop_cell) return true;
      if (t.died) continue;
      if (seen.insert(t.state).second) {
        queue.push_back(t.state);
        if (standing && grounded(level, t.state.pos)) standing->insert(t.state.pos);
      }
    }
  }
  return false;
}

bool maze_reachable(const LevelSpec& level, Cell from, Cell to) {
  if (level.at(from.x, from.y) == Tile::wall || level.at(to.x, to.y) == Tile::wall) return false;
  std::vector<uint8_t> seen(static_cast<size_t>(level.width) * level.height, 0);
  std::deque<Cell> queue{from};
  seen[static_cast<size_t>(from.y) * level.width + from.x] = 1;
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    if (c == to) return true;
    const int dx[4] = {0, 0, -1, 1}, dy[4] = {-1, 1, 0, 0};
    for (int d = 0; d < 4; ++d) {
      const int nx = c.x + dx[d], ny = c.y + dy[d];
      if (level.solid(nx, ny)) continue;
      auto& flag = seen[static_cast<size_t>(ny) * level.width + nx];
      if (!flag) {
        flag = 1;
        queue.push_back({nx, ny});
      }
    }
  }
  return false;
}

}  // namespace

bool path_exists(const LevelSpec& level, Cell from, Cell to) {
  if (!level.in_bounds(from.x, from.y) || !level.in_bounds(to.x, to.y))
    throw std::invalid_argument("path_exists: cell out of bounds");
  if (level.family == Family::coinrun)
    return platformer_bfs(level, PhysState{from, 0}, &to, nullptr);
  return maze_reachable(level, from, to);
}

std::vector<Cell> reachable_standing_cells(const LevelSpec& level) {
  std::set<Cell> standing;
  platformer_bfs(level, PhysState{level.spawn, 0}, nullptr, &standing);
  std::vector<Cell> cells(standing.begin(), standing.end());
  std::sort(cells.begin(), cells.end(), [](Cell a, Cell b) {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  });
  return cells;
}

// ---------------------------------------------------------------------------
// Generators

Cell maze_cell_tile(int cx, int cy) { return {2 * cx + 1, 2 * cy + 1}; }
Cell maze_training_corner() { return maze_cell_tile(kMazeCells - 1, 0); }

namespace {

LevelSpec maze_level_base(num::RngStream& rng, Family family) {
  MazeGrid grid = kruskal_maze(rng, kMazeCells, kMazeCells);
  LevelSpec lvl;
  lvl.family = family;
  lvl.width = lvl.height = kMazeTiles;
  lvl.tiles.assign(static_cast<size_t>(kMazeTiles) * kMazeTiles, Tile::wall);
  for (int cy = 0; cy < kMazeCells; ++cy)
    for (int cx = 0; cx < kMazeCells; ++cx) {
      const Cell t = maze_cell_tile(cx, cy);
      lvl.at(t.x, t.y) = Tile::empty;
      if (cx + 1 < kMazeCells && grid.east(cx, cy)) lvl.at(t.x + 1, t.y) = Tile::empty;
      if (cy + 1 < kMazeCells && grid.south(cx, cy)) lvl.at(t.x, t.y + 1) = Tile::empty;
    }
  return lvl;
}

int cell_index(num::RngStream& rng, int count) { return static_cast<int>(rng.bounded(static_cast<uint64_t>(count))); }

// Uniform over maze cells excluding `taken`; cells enumerated row-major.
Cell draw_free_cell(num::RngStream& rng, const std::vector<Cell>& taken) {
  std::vector<Cell> free_cells;
  for (int cy = 0; cy < kMazeCells; ++cy)
    for (int cx = 0; cx < kMazeCells; ++cx) {
      const Cell t = maze_cell_tile(cx, cy);
      if (std::find(taken.begin(), taken.end(), t) == taken.end()) free_cells.push_back(t);
    }
  return free_cells[static_cast<size_t>(cell_index(rng, static_cast<int>(free_cells.size())))];
}

}  // namespace

LevelSpec gen_maze1(num::RngStream& rng, const ShiftConfig& shift) {
  LevelSpec lvl = maze_level_base(rng, Family::maze1);
  if (shift.cheese_mode == CheeseMode::fixed_corner) {
    // cheese pinned to the corner for every seed; spawn keeps clear of it
    lvl.spawn = draw_free_cell(rng, {maze_training_corner()});
    lvl.objects.push_back({ObjectKind::cheese, Color::none, Shape::none, maze_training_corner()});
  } else {
    const int spawn_idx = cell_index(rng, kMazeCells * kMazeCells);
    lvl.spawn = maze_cell_tile(spawn_idx % kMazeCells, spawn_idx / kMazeCells);
    lvl.objects.push_back({ObjectKind::cheese, Color::none, Shape::none, draw_free_cell(rng, {lvl.spawn})});
  }
  return lvl;
}

LevelSpec gen_maze2(num::RngStream& rng, const ShiftConfig& shift) {
  LevelSpec lvl = maze_level_base(rng, Family::maze2);
  const int spawn_idx = cell_index(rng, kMazeCells * kMazeCells);
  lvl.spawn = maze_cell_tile(spawn_idx % kMazeCells, spawn_idx / kMazeCells);
  if (shift.ambiguity_phase == AmbiguityPhase::train_yellow_gem) {
    lvl.objects.push_back({ObjectKind::composite, Color::yellow, Shape::gem, draw_free_cell(rng, {lvl.spawn})});
  } else {
    const Cell star = draw_free_cell(rng, {lvl.spawn});
    const Cell gem = draw_free_cell(rng, {lvl.spawn, star});
    lvl.objects.push_back({ObjectKind::composite, Color::yellow, Shape::star, star});
    lvl.objects.push_back({ObjectKind::composite, Color::red, Shape::gem, gem});
  }
  return lvl;
}

LevelSpec gen_keyschests(num::RngStream& rng, const ShiftConfig& shift) {
  LevelSpec lvl = maze_level_base(rng, Family::keyschests);
  const int spawn_idx = cell_index(rng, kMazeCells * kMazeCells);
  lvl.spawn = maze_cell_tile(spawn_idx % kMazeCells, spawn_idx / kMazeCells);
  const int k = 1 + cell_index(rng, 3);
  const int keys = shift.keychest_ratio == KeyChestRatio::chests_double ? k : 2 * k;
  const int chests = shift.keychest_ratio == KeyChestRatio::chests_double ? 2 * k : k;
  std::vector<Cell> taken{lvl.spawn};
  for (int i = 0; i < keys; ++i) {
    const Cell c = draw_free_cell(rng, taken);
    taken.push_back(c);
    lvl.objects.push_back({ObjectKind::key, Color::none, Shape::none, c});
  }
  for (int i = 0; i < chests; ++i) {
    const Cell c = draw_free_cell(rng, taken);
    taken.push_back(c);
    lvl.objects.push_back({ObjectKind::chest, Color::none, Shape::none, c});
  }
  return lvl;
}

namespace {

// Terrain ops consume columns left to right; heights in [1, 5], rises of
// 1-2 need a jump, gaps of width 1-2 carry lava, surface hazards are one
// column wide and flanked by flat ground.
LevelSpec gen_coinrun_attempt(num::RngStream& rng, bool coin_randomized) {
  const int w = kPlatformerWidth, h = kPlatformerHeight;
  LevelSpec lvl;
  lvl.family = Family::coinrun;
  lvl.width = w;
  lvl.height = h;
  lvl.tiles.assign(static_cast<size_t>(w) * h, Tile::empty);

  std::vector<int> ground(static_cast<size_t>(w), 0);  // 0 == gap
  std::vector<bool> surface_hazard(static_cast<size_t>(w), false);
  ground[0] = ground[1] = 2;
  int x = 2, prev = 2;
  bool prev_flat = true;
  while (x < w - 2) {
    const int r = static_cast<int>(rng.bounded(100));
    if (r < 16 && prev_flat && x + 2 < w - 2) {  // gap + landing column
      const int gap_w = 1 + static_cast<int>(rng.bounded(2));
      for (int g = 0; g < gap_w && x < w - 3; ++g) ground[static_cast<size_t>(x++)] = 0;
      ground[static_cast<size_t>(x++)] = prev;
      prev_flat = true;
    } else if (r < 34) {  // rise 1-2
      const int dh = 1 + static_cast<int>(rng.bounded(2));
      prev = std::min(prev + dh, 5);
      ground[static_cast<size_t>(x++)] = prev;
      prev_flat = false;
    } else if (r < 52) {  // drop 1-2
      const int dh = 1 + static_cast<int>(rng.bounded(2));
      prev = std::max(prev - dh, 1);
      ground[static_cast<size_t>(x++)] = prev;
      prev_flat = false;
    } else if (r < 64 && prev_flat && x + 1 < w - 2) {  // surface hazard + flat
      surface_hazard[static_cast<size_t>(x)] = true;
      ground[static_cast<size_t>(x++)] = prev;
      ground[static_cast<size_t>(x++)] = prev;
      prev_flat = true;
    } else {
      ground[static_cast<size_t>(x++)] = prev;
      prev_flat = true;
    }
  }
  while (x < w) ground[static_cast<size_t>(x++)] = prev;  // flat goal approach

  for (int cx = 0; cx < w; ++cx) {
    if (ground[static_cast<size_t>(cx)] == 0) {
      lvl.at(cx, h - 1) = Tile::hazard;  // lava at the bottom of gaps
      continue;
    }
    for (int y = h - ground[static_cast<size_t>(cx)]; y < h; ++y) lvl.at(cx, y) = Tile::wall;
    if (surface_hazard[static_cast<size_t>(cx)])
      lvl.at(cx, h - 1 - ground[static_cast<size_t>(cx)]) = Tile::hazard;
  }

  // decorative overhang platforms, kept 3+ cells above local stand height
  const int n_plat = static_cast<int>(rng.bounded(3));
  for (int i = 0; i < n_plat; ++i) {
    const int px = 3 + static_cast<int>(rng.bounded(static_cast<uint64_t>(w - 9)));
    const int pw = 2 + static_cast<int>(rng.bounded(2));
    int max_g = 0;
    for (int c = px; c < px + pw; ++c) max_g = std::max(max_g, ground[static_cast<size_t>(c)]);
    const int py = h - 1 - max_g - 3;
    if (py < 1) continue;
    for (int c = px; c < px + pw; ++c)
      if (lvl.at(c, py) == Tile::empty) lvl.at(c, py) = Tile::wall;
  }

  lvl.spawn = {0, h - 1 - ground[0]};

  Cell coin{w - 1, h - 1 - ground[static_cast<size_t>(w - 1)]};
  if (coin_randomized) {
    std::vector<Cell> cells = reachable_standing_cells(lvl);
    std::erase(cells, lvl.spawn);
    if (cells.empty()) return lvl;  // caller retries (no reward object)
    coin = cells[static_cast<size_t>(cell_index(rng, static_cast<int>(cells.size())))];
  }
  lvl.objects.push_back({ObjectKind::coin, Color::none, Shape::none, coin});
  return lvl;
}

}  // namespace

LevelSpec gen_coinrun(num::RngStream& rng, const ShiftConfig& shift, bool coin_randomized) {
  (void)shift;
  return gen_coinrun_attempt(rng, coin_randomized);
}

bool coin_randomized_for_seed(uint64_t level_seed, int coin_random_pct) {
  num::RngStream bern(level_seed, num::kStreamCoinBern);
  return bern.uniform01() < coin_random_pct / 100.0;
}

namespace {

bool level_solvable(const LevelSpec& lvl) {
  if (lvl.objects.empty()) return false;
  for (const ObjectSpec& o : lvl.objects)
    if (!path_exists(lvl, lvl.spawn, o.cell)) return false;
  return true;
}

}  // namespace

LevelSpec generate_level(uint64_t level_seed, const ShiftConfig& shift) {
  for (uint64_t attempt = 0;; ++attempt) {
    num::RngStream rng(level_seed, num::substream(num::kStreamGen, attempt));
    LevelSpec lvl;
    switch (shift.family) {
      case Family::coinrun:
        lvl = gen_coinrun(rng, shift, coin_randomized_for_seed(level_seed, shift.coin_random_pct));
        break;
      case Family::maze1: lvl = gen_maze1(rng, shift); break;
      case Family::maze2: lvl = gen_maze2(rng, shift); break;
      case Family::keyschests: lvl = gen_keyschests(rng, shift); break;
    }
    if (level_solvable(lvl)) return lvl;
  }
}

}  // namespace misgen::worlds
