#pragma once

#include <vector>

#include "misgen/rng.hpp"

namespace misgen::worlds {

// Perfect maze on a cell grid: the open-passage set forms a spanning tree,
// so passage_count() == width*height - 1 and every cell pair is connected
// by exactly one simple path.
struct MazeGrid {
  int width = 0, height = 0;
  std::vector<uint8_t> open_east;   // passage (x,y)-(x+1,y)
  std::vector<uint8_t> open_south;  // passage (x,y)-(x,y+1)

  bool east(int x, int y) const { return open_east[static_cast<size_t>(y) * width + x] != 0; }
  bool south(int x, int y) const { return open_south[static_cast<size_t>(y) * width + x] != 0; }
  int passage_count() const;
};

MazeGrid kruskal_maze(num::RngStream& rng, int width, int height);

}  // namespace misgen::worlds
