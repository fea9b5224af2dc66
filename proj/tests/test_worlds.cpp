#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "misgen/maze.hpp"
#include "misgen/worldgen.hpp"
#include "oracles/flood_fill.hpp"

using namespace misgen::worlds;
using misgen::num::RngStream;

TEST_CASE("kruskal: 1x1 maze has zero passages") {
  RngStream rng(1, 0);
  MazeGrid m = kruskal_maze(rng, 1, 1);
  CHECK(m.passage_count() == 0);
}

TEST_CASE("kruskal: 2x2 maze is a spanning tree of 4 nodes") {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    RngStream rng(seed, 0);
    MazeGrid m = kruskal_maze(rng, 2, 2);
    CHECK(m.passage_count() == 3);
    CHECK(oracle::flood_fill_count(m, 0, 0) == 4);
  }
}

TEST_CASE("kruskal: 8x8 seed 42 reaches all 64 cells with 63 passages") {
  RngStream rng(42, 0);
  MazeGrid m = kruskal_maze(rng, 8, 8);
  CHECK(m.passage_count() == 63);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) CHECK(oracle::flood_fill_count(m, x, y) == 64);
}

TEST_CASE("kruskal: perfect-maze property across seeds and sizes") {
  for (uint64_t seed = 0; seed < 200; ++seed) {
    RngStream rng(seed, 3);
    const int w = 2 + static_cast<int>(seed % 7), h = 2 + static_cast<int>((seed / 7) % 5);
    MazeGrid m = kruskal_maze(rng, w, h);
    CHECK(m.passage_count() == w * h - 1);
    CHECK(oracle::flood_fill_count(m, 0, 0) == w * h);
  }
}

TEST_CASE("kruskal: deterministic in rng state") {
  RngStream a(7, 1), b(7, 1);
  MazeGrid ma = kruskal_maze(a, 5, 5), mb = kruskal_maze(b, 5, 5);
  CHECK(ma.open_east == mb.open_east);
  CHECK(ma.open_south == mb.open_south);
}

TEST_CASE("coinrun: p=0 places the coin in the rightmost goal column") {
  ShiftConfig s = train_shift(Family::coinrun);
  for (uint64_t seed = 0; seed < 1000; ++seed) {
    LevelSpec lvl = generate_level(seed, s);
    REQUIRE(lvl.objects.size() == 1);
    CHECK(lvl.objects[0].cell.x == lvl.width - 1);
    CHECK(lvl.spawn.x == 0);
  }
}

TEST_CASE("coinrun: every generated level has a path from spawn to the coin") {
  for (int pct : {0, 100}) {
    ShiftConfig s = train_shift(Family::coinrun);
    s.coin_random_pct = pct;
    for (uint64_t seed = 100; seed < 400; ++seed) {
      LevelSpec lvl = generate_level(seed, s);
      CHECK(path_exists(lvl, lvl.spawn, lvl.objects[0].cell));
    }
  }
}

TEST_CASE("coinrun: p=100 coin is uniform over reachable standing cells") {
  ShiftConfig s = train_shift(Family::coinrun);
  s.coin_random_pct = 100;
  int rightmost = 0, total = 0;
  double expected_rightmost = 0;
  const int n = 4000;
  for (uint64_t seed = 0; seed < n; ++seed) {
    LevelSpec lvl = generate_level(seed, s);
    // census oracle: reachable standing cells minus spawn
    std::vector<Cell> cells = reachable_standing_cells(lvl);
    std::erase(cells, lvl.spawn);
    int in_goal_col = 0;
    for (Cell c : cells) in_goal_col += (c.x == lvl.width - 1);
    expected_rightmost += static_cast<double>(in_goal_col) / static_cast<double>(cells.size());
    rightmost += (lvl.objects[0].cell.x == lvl.width - 1);
    total++;
  }
  const double observed = static_cast<double>(rightmost) / total;
  const double expected = expected_rightmost / total;
  CHECK(std::abs(observed - expected) < 0.03);
}

TEST_CASE("coinrun: p-compliance of the per-level Bernoulli draw") {
  for (int pct : {1, 2, 5, 10}) {
    const int n = 20000;
    int hits = 0;
    for (uint64_t seed = 0; seed < n; ++seed) hits += coin_randomized_for_seed(seed, pct);
    const double p = pct / 100.0;
    const double sigma = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(hits / double(n) - p) < 3 * sigma);
  }
}

TEST_CASE("maze1: fixed corner mode pins the cheese to the training corner") {
  ShiftConfig s = train_shift(Family::maze1);
  for (uint64_t seed = 0; seed < 1000; ++seed) {
    LevelSpec lvl = generate_level(seed, s);
    REQUIRE(lvl.objects.size() == 1);
    CHECK(lvl.objects[0].cell == maze_training_corner());
    CHECK(lvl.objects[0].kind == ObjectKind::cheese);
    CHECK_FALSE(lvl.spawn == lvl.objects[0].cell);
  }
}

TEST_CASE("maze1: random mode places cheese uniformly over non-spawn cells") {
  ShiftConfig s = test_shift(Family::maze1);
  std::map<std::pair<int, int>, int> counts;
  const int n = 10000;
  for (uint64_t seed = 0; seed < n; ++seed) {
    LevelSpec lvl = generate_level(seed, s);
    CHECK_FALSE(lvl.spawn == lvl.objects[0].cell);
    counts[{lvl.objects[0].cell.x, lvl.objects[0].cell.y}]++;
  }
  CHECK(counts.size() == 25);  // every cell is hit across seeds
  for (const auto& [cell, cnt] : counts)
    CHECK(std::abs(cnt / double(n) - 1.0 / 25.0) < 0.03);
}

TEST_CASE("maze2: train phase places exactly one yellow gem") {
  ShiftConfig s = train_shift(Family::maze2);
  for (uint64_t seed = 0; seed < 500; ++seed) {
    LevelSpec lvl = generate_level(seed, s);
    REQUIRE(lvl.objects.size() == 1);
    CHECK(lvl.objects[0].kind == ObjectKind::composite);
    CHECK(lvl.objects[0].color == Color::yellow);
    CHECK(lvl.objects[0].shape == Shape::gem);
    CHECK_FALSE(lvl.objects[0].cell == lvl.spawn);
  }
}

TEST_CASE("maze2: test phase crosses color and shape at distinct cells") {
  ShiftConfig s = test_shift(Family::maze2);
  std::map<std::pair<int, int>, int> star_counts;
  const int n = 10000;
  for (uint64_t seed = 0; seed < n; ++seed) {
    LevelSpec lvl = generate_level(seed, s);
    REQUIRE(lvl.objects.size() == 2);
    const ObjectSpec& star = lvl.objects[0];
    const ObjectSpec& gem = lvl.objects[1];
    CHECK(star.color == Color::yellow);
    CHECK(star.shape == Shape::star);
    CHECK(gem.color == Color::red);
    CHECK(gem.shape == Shape::gem);
    CHECK_FALSE(star.cell == gem.cell);
    CHECK_FALSE(star.cell == lvl.spawn);
    CHECK_FALSE(gem.cell == lvl.spawn);
    CHECK(path_exists(lvl, lvl.spawn, star.cell));
    CHECK(path_exists(lvl, lvl.spawn, gem.cell));
    star_counts[{star.cell.x, star.cell.y}]++;
  }
  for (const auto& [cell, cnt] : star_counts)
    CHECK(std::abs(cnt / double(n) - 1.0 / 25.0) < 0.03);
}

TEST_CASE("keyschests: ratio of keys to chests follows the shift config") {
  for (auto ratio : {KeyChestRatio::chests_double, KeyChestRatio::keys_double}) {
    ShiftConfig s = train_shift(Family::keyschests);
    s.keychest_ratio = ratio;
    std::set<int> seen_k;
    for (uint64_t seed = 0; seed < 500; ++seed) {
      LevelSpec lvl = generate_level(seed, s);
      int keys = 0, chests = 0;
      std::set<std::pair<int, int>> cells{{lvl.spawn.x, lvl.spawn.y}};
      for (const ObjectSpec& o : lvl.objects) {
        keys += o.kind == ObjectKind::key;
        chests += o.kind == ObjectKind::chest;
        CHECK(cells.insert({o.cell.x, o.cell.y}).second);  // distinct, off spawn
      }
      if (ratio == KeyChestRatio::chests_double) {
        CHECK(chests == 2 * keys);
        seen_k.insert(keys);
      } else {
        CHECK(keys == 2 * chests);
        seen_k.insert(chests);
      }
    }
    CHECK(seen_k == std::set<int>{1, 2, 3});
  }
}

TEST_CASE("keyschests: brute-force planner confirms max return = min(keys, chests)") {
  for (uint64_t seed = 0; seed < 40; ++seed) {
    for (auto ratio : {KeyChestRatio::chests_double, KeyChestRatio::keys_double}) {
      oracle::SmallKeysChests inst = oracle::make_small_keyschests(seed, ratio == KeyChestRatio::keys_double);
      const int max_ret = oracle::brute_force_max_chests(inst);
      CHECK(max_ret == std::min(inst.keys, inst.chests));
    }
  }
}

TEST_CASE("path_exists: trivial maze cases") {
  ShiftConfig s = train_shift(Family::maze1);
  LevelSpec lvl = generate_level(5, s);
  // adjacent open cells
  Cell a = lvl.spawn;
  const int dx[4] = {0, 0, -1, 1}, dy[4] = {-1, 1, 0, 0};
  for (int d = 0; d < 4; ++d) {
    Cell b{a.x + dx[d], a.y + dy[d]};
    if (lvl.in_bounds(b.x, b.y) && lvl.at(b.x, b.y) == Tile::empty) {
      CHECK(path_exists(lvl, a, b));
      break;
    }
  }
  // a wall-enclosed cell is unreachable
  Cell wall_cell{0, 0};
  CHECK_FALSE(path_exists(lvl, a, wall_cell));
  CHECK_THROWS(path_exists(lvl, a, Cell{-1, 0}));
}

TEST_CASE("path_exists: all cell pairs connected in a perfect maze") {
  ShiftConfig s = train_shift(Family::maze1);
  LevelSpec lvl = generate_level(77, s);
  std::vector<Cell> cells;
  for (int cy = 0; cy < kMazeCells; ++cy)
    for (int cx = 0; cx < kMazeCells; ++cx) cells.push_back(maze_cell_tile(cx, cy));
  for (const Cell& a : cells)
    for (const Cell& b : cells) CHECK(path_exists(lvl, a, b));
}

TEST_CASE("platformer physics: jump clears a two-cell gap") {
  LevelSpec lvl;
  lvl.family = Family::coinrun;
  lvl.width = 10;
  lvl.height = 6;
  lvl.tiles.assign(60, Tile::empty);
  for (int x = 0; x < 10; ++x)
    if (x < 3 || x > 4) lvl.at(x, 5) = Tile::wall;  // gap at x=3,4
  lvl.at(3, 5) = Tile::hazard;
  lvl.at(4, 5) = Tile::hazard;
  lvl.spawn = {2, 4};

  PhysState s{lvl.spawn, 0};
  TickResult t = platformer_tick(lvl, s, kActJump);
  CHECK_FALSE(t.died);
  t = platformer_tick(lvl, t.state, kActRight);
  t = platformer_tick(lvl, t.state, kActRight);
  t = platformer_tick(lvl, t.state, kActRight);
  CHECK_FALSE(t.died);
  t = platformer_tick(lvl, t.state, kActRight);
  CHECK_FALSE(t.died);
  CHECK(t.state.pos.x >= 5);
  CHECK(grounded(lvl, t.state.pos));

  // walking straight in falls into the lava within the same tick
  PhysState s2{lvl.spawn, 0};
  TickResult t2 = platformer_tick(lvl, s2, kActRight);
  CHECK(t2.died);
  CHECK(t2.state.pos == Cell{3, 5});
}

TEST_CASE("platformer physics: jump reaches a two-cell rise") {
  LevelSpec lvl;
  lvl.family = Family::coinrun;
  lvl.width = 6;
  lvl.height = 8;
  lvl.tiles.assign(48, Tile::empty);
  for (int x = 0; x < 6; ++x) lvl.at(x, 7) = Tile::wall;
  for (int x = 3; x < 6; ++x) {
    lvl.at(x, 6) = Tile::wall;
    lvl.at(x, 5) = Tile::wall;
  }
  lvl.spawn = {2, 6};
  PhysState s{lvl.spawn, 0};
  TickResult t = platformer_tick(lvl, s, kActJump);
  t = platformer_tick(lvl, t.state, kActRight);
  t = platformer_tick(lvl, t.state, kActRight);
  CHECK(t.state.pos == Cell{3, 4});
  CHECK(grounded(lvl, t.state.pos));
}

TEST_CASE("generator determinism: identical seed and shift give identical levels") {
  for (Family f : {Family::coinrun, Family::maze1, Family::maze2, Family::keyschests}) {
    ShiftConfig s = test_shift(f);
    LevelSpec a = generate_level(123, s), b = generate_level(123, s);
    CHECK(a.tiles == b.tiles);
    CHECK(a.spawn == b.spawn);
    REQUIRE(a.objects.size() == b.objects.size());
    for (size_t i = 0; i < a.objects.size(); ++i) CHECK(a.objects[i].cell == b.objects[i].cell);
  }
}
