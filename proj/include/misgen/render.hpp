#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "misgen/env.hpp"

namespace misgen::env {

// Ascii glyphs, one per tile kind (docs/WORLDS.md):
//   '#' wall   '.' floor/air   '@' agent   '~' hazard
//   'o' coin   'c' cheese      'k' key     'C' chest
//   'g' yellow gem  's' yellow star  'G' red gem  'S' red star
char glyph_for(const worlds::ObjectSpec& o);
std::string render_ascii(const Env& e);
std::string render_ascii_level(const LevelSpec& level);  // no agent glyph

struct RgbImage {
  int width = 0, height = 0;
  std::vector<uint8_t> data;  // RGB8, row-major

  uint8_t* px(int x, int y) { return data.data() + (static_cast<size_t>(y) * width + x) * 3; }
  const uint8_t* px(int x, int y) const { return data.data() + (static_cast<size_t>(y) * width + x) * 3; }
};

inline constexpr int kSprite = 8;  // pixels per tile side

struct Rgb {
  uint8_t r, g, b;
};
// Palette, one color per tile kind (docs/WORLDS.md).
inline constexpr Rgb kColWall{110, 110, 110}, kColFloor{24, 24, 28}, kColAgent{70, 130, 255},
    kColHazard{230, 70, 40}, kColCoin{255, 200, 40}, kColCheese{250, 220, 130},
    kColKey{80, 220, 220}, kColChest{160, 100, 40}, kColYellow{255, 214, 0}, kColRed{220, 40, 40};

// 8x8 sprite masks (one byte per row, MSB = leftmost pixel).
using SpriteMask = std::array<uint8_t, 8>;
const SpriteMask& sprite_star();
const SpriteMask& sprite_gem();

RgbImage render_rgb(const Env& e);
std::string to_ppm(const RgbImage& img);

}  // namespace misgen::env
