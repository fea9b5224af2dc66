#include "misgen/maze.hpp"

#include <numeric>

namespace misgen::worlds {

int MazeGrid::passage_count() const {
  int n = 0;
  for (uint8_t v : open_east) n += v;
  for (uint8_t v : open_south) n += v;
  return n;
}

namespace {

struct UnionFind {
  std::vector<int> parent, rank_;
  explicit UnionFind(int n) : parent(static_cast<size_t>(n)), rank_(static_cast<size_t>(n), 0) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[static_cast<size_t>(a)] != a) {
      parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
      a = parent[static_cast<size_t>(a)];
    }
    return a;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[static_cast<size_t>(a)] < rank_[static_cast<size_t>(b)]) std::swap(a, b);
    parent[static_cast<size_t>(b)] = a;
    if (rank_[static_cast<size_t>(a)] == rank_[static_cast<size_t>(b)]) rank_[static_cast<size_t>(a)]++;
    return true;
  }
};

}  // namespace

MazeGrid kruskal_maze(num::RngStream& rng, int width, int height) {
  MazeGrid m;
  m.width = width;
  m.height = height;
  m.open_east.assign(static_cast<size_t>(width) * height, 0);
  m.open_south.assign(static_cast<size_t>(width) * height, 0);

  // walls between adjacent cells: east edges row-major, then south edges
  struct Edge {
    int x, y;
    bool east;
  };
  std::vector<Edge> edges;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x + 1 < width; ++x) edges.push_back({x, y, true});
  for (int y = 0; y + 1 < height; ++y)
    for (int x = 0; x < width; ++x) edges.push_back({x, y, false});

  // Fisher-Yates from the back, one bounded draw per position
  for (size_t i = edges.size(); i > 1; --i) {
    const size_t j = rng.bounded(i);
    std::swap(edges[i - 1], edges[j]);
  }

  UnionFind uf(width * height);
  auto id = [&](int x, int y) { return y * width + x; };
  for (const Edge& e : edges) {
    const int a = id(e.x, e.y);
    const int b = e.east ? id(e.x + 1, e.y) : id(e.x, e.y + 1);
    if (uf.unite(a, b)) {
      auto& plane = e.east ? m.open_east : m.open_south;
      plane[static_cast<size_t>(e.y) * width + e.x] = 1;
    }
  }
  return m;
}

}  // namespace misgen::worlds
