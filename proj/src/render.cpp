#include "misgen/render.hpp"

#include <sstream>

namespace misgen::env {

char glyph_for(const worlds::ObjectSpec& o) {
  using worlds::Color;
  using worlds::ObjectKind;
  using worlds::Shape;
  switch (o.kind) {
    case ObjectKind::coin: return 'o';
    case ObjectKind::cheese: return 'c';
    case ObjectKind::key: return 'k';
    case ObjectKind::chest: return 'C';
    case ObjectKind::composite:
      if (o.shape == Shape::gem) return o.color == Color::yellow ? 'g' : 'G';
      return o.color == Color::yellow ? 's' : 'S';
  }
  return '?';
}

namespace {

std::vector<char> glyph_grid(const LevelSpec& level, const std::vector<uint8_t>* alive) {
  std::vector<char> g(static_cast<size_t>(level.width) * level.height, '.');
  for (int y = 0; y < level.height; ++y)
    for (int x = 0; x < level.width; ++x) {
      if (level.at(x, y) == worlds::Tile::wall) g[static_cast<size_t>(y) * level.width + x] = '#';
      if (level.at(x, y) == worlds::Tile::hazard) g[static_cast<size_t>(y) * level.width + x] = '~';
    }
  for (size_t i = 0; i < level.objects.size(); ++i) {
    if (alive && !(*alive)[i]) continue;
    const auto& o = level.objects[i];
    g[static_cast<size_t>(o.cell.y) * level.width + o.cell.x] = glyph_for(o);
  }
  return g;
}

std::string grid_to_string(const std::vector<char>& g, int width, int height) {
  std::string out;
  out.reserve(static_cast<size_t>(height) * (width + 1));
  for (int y = 0; y < height; ++y) {
    out.append(g.begin() + static_cast<int64_t>(y) * width, g.begin() + static_cast<int64_t>(y + 1) * width);
    out.push_back('\n');
  }
  return out;
}

}  // namespace

std::string render_ascii(const Env& e) {
  std::vector<char> g = glyph_grid(e.level(), &e.alive());
  g[static_cast<size_t>(e.agent().y) * e.level().width + e.agent().x] = '@';
  return grid_to_string(g, e.level().width, e.level().height);
}

std::string render_ascii_level(const LevelSpec& level) {
  return grid_to_string(glyph_grid(level, nullptr), level.width, level.height);
}

namespace {

const SpriteMask kBlock = {0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF};
const SpriteMask kAgent = {0x18, 0x18, 0x7E, 0x18, 0x18, 0x24, 0x42, 0x00};
const SpriteMask kHazard = {0x00, 0x00, 0x24, 0x24, 0x66, 0x66, 0xFF, 0xFF};
const SpriteMask kCoin = {0x3C, 0x7E, 0xFF, 0xFF, 0xFF, 0xFF, 0x7E, 0x3C};
const SpriteMask kCheese = {0x00, 0x03, 0x0F, 0x3F, 0xFF, 0xFF, 0xFF, 0x00};
const SpriteMask kKey = {0x38, 0x44, 0x44, 0x38, 0x10, 0x18, 0x10, 0x18};
const SpriteMask kChest = {0x00, 0x7E, 0xFF, 0x7E, 0x7E, 0x7E, 0x7E, 0x00};
const SpriteMask kGem = {0x18, 0x3C, 0x7E, 0xFF, 0x7E, 0x3C, 0x18, 0x00};
const SpriteMask kStar = {0x18, 0x18, 0x7E, 0x3C, 0x3C, 0x66, 0x42, 0x00};

void blit(RgbImage& img, int tx, int ty, const SpriteMask& mask, Rgb color) {
  for (int r = 0; r < kSprite; ++r)
    for (int c = 0; c < kSprite; ++c) {
      if (!(mask[static_cast<size_t>(r)] & (0x80u >> c))) continue;
      uint8_t* p = img.px(tx * kSprite + c, ty * kSprite + r);
      p[0] = color.r;
      p[1] = color.g;
      p[2] = color.b;
    }
}

}  // namespace

const SpriteMask& sprite_star() { return kStar; }
const SpriteMask& sprite_gem() { return kGem; }

RgbImage render_rgb(const Env& e) {
  const LevelSpec& level = e.level();
  RgbImage img;
  img.width = level.width * kSprite;
  img.height = level.height * kSprite;
  img.data.assign(static_cast<size_t>(img.width) * img.height * 3, 0);
  for (int y = 0; y < level.height; ++y)
    for (int x = 0; x < level.width; ++x) {
      blit(img, x, y, kBlock, kColFloor);
      if (level.at(x, y) == worlds::Tile::wall) blit(img, x, y, kBlock, kColWall);
      if (level.at(x, y) == worlds::Tile::hazard) blit(img, x, y, kHazard, kColHazard);
    }
  for (size_t i = 0; i < level.objects.size(); ++i) {
    if (!e.alive()[i]) continue;
    const auto& o = level.objects[i];
    switch (o.kind) {
      case worlds::ObjectKind::coin: blit(img, o.cell.x, o.cell.y, kCoin, kColCoin); break;
      case worlds::ObjectKind::cheese: blit(img, o.cell.x, o.cell.y, kCheese, kColCheese); break;
      case worlds::ObjectKind::key: blit(img, o.cell.x, o.cell.y, kKey, kColKey); break;
      case worlds::ObjectKind::chest: blit(img, o.cell.x, o.cell.y, kChest, kColChest); break;
      case worlds::ObjectKind::composite: {
        const Rgb col = o.color == worlds::Color::yellow ? kColYellow : kColRed;
        blit(img, o.cell.x, o.cell.y, o.shape == worlds::Shape::gem ? kGem : kStar, col);
        break;
      }
    }
  }
  blit(img, e.agent().x, e.agent().y, kAgent, kColAgent);
  return img;
}

std::string to_ppm(const RgbImage& img) {
  std::ostringstream os;
  os << "P6\n" << img.width << " " << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  return os.str();
}

}  // namespace misgen::env
