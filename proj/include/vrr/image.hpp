// Copyright 2026 The VRR Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "vrr/gridworld.hpp"

namespace vrr {

/// Packed 8-bit RGB image.
struct PixelImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  PixelImage() = default;
  PixelImage(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* pixel(int x, int y) { return &rgb[(static_cast<std::size_t>(y) * width + x) * 3]; }
  const std::uint8_t* pixel(int x, int y) const { return &rgb[(static_cast<std::size_t>(y) * width + x) * 3]; }

  bool operator==(const PixelImage&) const = default;
};

namespace detail {

using Rgb = std::array<std::uint8_t, 3>;

inline Rgb tile_color(Tile t) {
  static constexpr std::array<Rgb, kTileCount> kColors{{
      {110, 60, 40},   // wall
      {20, 20, 20},    // floor
      {200, 40, 40},   // target
      {190, 140, 60},  // box
      {230, 200, 60},  // box on target
      {40, 180, 70},   // agent
      {60, 220, 140},  // agent on target
      {240, 220, 0},   // key
      {150, 110, 0},   // door
      {30, 200, 30},   // goal
      {200, 30, 30},   // agent N
      {200, 30, 30},   // agent E
      {200, 30, 30},   // agent S
      {200, 30, 30},   // agent W
      {200, 30, 90},   // agent N + key
      {200, 30, 90},   // agent E + key
      {200, 30, 90},   // agent S + key
      {200, 30, 90},   // agent W + key
  }};
  return kColors[static_cast<std::size_t>(t)];
}

inline void put(PixelImage& img, int x, int y, Rgb c) {
  std::uint8_t* p = img.pixel(x, y);
  p[0] = c[0];
  p[1] = c[1];
  p[2] = c[2];
}

inline Rgb shade(Rgb c, int delta) {
  Rgb out{};
  for (int i = 0; i < 3; ++i) out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::clamp(c[static_cast<std::size_t>(i)] + delta, 0, 255));
  return out;
}

// Row-major px*px glyph mask.
using Glyph = std::vector<bool>;

inline Glyph rotate_glyph(const Glyph& g, int px) {
  Glyph out(g.size(), false);
  for (int y = 0; y < px; ++y) {
    for (int x = 0; x < px; ++x) out[static_cast<std::size_t>(x * px + (px - 1 - y))] = g[static_cast<std::size_t>(y * px + x)];
  }
  return out;
}

inline Glyph symmetrize(Glyph g, int px) {
  Glyph r = g;
  for (int i = 0; i < 3; ++i) {
    r = rotate_glyph(r, px);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = g[k] || r[k];
  }
  return g;
}

// Marks drawn in one orientation. Tiles without a heading get the union of
// all four rotations of theirs; agent sprites are the north-facing mark turned.
inline Glyph glyph(Tile t, int px) {
  Glyph g(static_cast<std::size_t>(px) * px, false);
  const int c = px / 2;
  const int q = px / 4;
  auto dot = [&](int x, int y) {
    if (x >= 1 && y >= 1 && x < px - 1 && y < px - 1) g[static_cast<std::size_t>(y * px + x)] = true;
  };
  auto cross = [&] {
    for (int y = q; y < px - q; ++y) dot(c - 1, y), dot(c, y);
  };
  switch (t) {
    case Tile::kTarget: cross(); break;
    case Tile::kBox:
      for (int x = q; x < px - q; ++x) dot(x, q);
      break;
    case Tile::kBoxOnTarget:
      cross();
      for (int x = q; x < px - q; ++x) dot(x, q);
      break;
    case Tile::kAgent: dot(c - 1, c - 1); break;
    case Tile::kAgentOnTarget:
      cross();
      dot(c - 2, c - 2);
      break;
    case Tile::kKey:
      for (int i = q; i < c - 1; ++i) dot(i, i);
      break;
    case Tile::kDoor:
      for (int x = 2; x < px - 2; ++x) dot(x, 2);
      break;
    case Tile::kGoal:
      for (int y = c - 2; y < c; ++y) dot(c - 2, y), dot(c - 1, y);
      break;
    default:
      if (t >= Tile::kAgentN) {
        const int v = static_cast<int>(t) - static_cast<int>(Tile::kAgentN);
        for (int y = q; y < px - q; ++y) dot(c - 1, y), dot(c, y);
        for (int x = c - 3; x < c + 3; ++x) dot(x, q + 1);
        for (int k = 0; k < v % 4; ++k) g = rotate_glyph(g, px);
        if (v >= 4) {
          Glyph carry(g.size(), false);
          std::swap(carry, g);
          dot(2, 2);
          g = symmetrize(g, px);
          for (std::size_t k = 0; k < g.size(); ++k) g[k] = g[k] || carry[k];
        }
        return g;
      }
      return g;
  }
  return symmetrize(g, px);
}

// Body colour inside a one-pixel frame, plus the tile's mark. The frame
// makes the four quadrants of every sprite differ; the marks make every
// sprite turned by a quarter the sprite of the turned tile.
inline std::vector<Rgb> sprite(Tile t, int px) {
  const Rgb body = tile_color(t);
  const Rgb edge = shade(body, -60);
  const Rgb mark = shade(body, 70);
  const Glyph g = glyph(t, px);
  std::vector<Rgb> out(static_cast<std::size_t>(px) * px);
  for (int y = 0; y < px; ++y) {
    for (int x = 0; x < px; ++x) {
      const auto k = static_cast<std::size_t>(y * px + x);
      const bool frame = px >= 2 && (x == 0 || y == 0 || x == px - 1 || y == px - 1);
      out[k] = frame ? edge : g[k] ? mark : body;
    }
  }
  return out;
}

}  // namespace detail

/// Renders one fixed sprite per tile type.
inline PixelImage render(const Grid<Tile>& cells, int sprite_px) {
  if (sprite_px < 1) throw Error("sprite size must be >= 1");
  PixelImage img(cells.width() * sprite_px, cells.height() * sprite_px);
  std::array<std::vector<detail::Rgb>, kTileCount> sprites;
  for (int r = 0; r < cells.height(); ++r) {
    for (int c = 0; c < cells.width(); ++c) {
      auto& bitmap = sprites[static_cast<std::size_t>(cells[{r, c}])];
      if (bitmap.empty()) bitmap = detail::sprite(cells[{r, c}], sprite_px);
      for (int y = 0; y < sprite_px; ++y) {
        for (int x = 0; x < sprite_px; ++x) {
          detail::put(img, c * sprite_px + x, r * sprite_px + y, bitmap[static_cast<std::size_t>(y * sprite_px + x)]);
        }
      }
    }
  }
  return img;
}

inline PixelImage render(const Level& level, int sprite_px) { return render(level.cells, sprite_px); }

/// Quarter turns clockwise.
inline PixelImage rotate_image(const PixelImage& img, int quarter_turns) {
  PixelImage out = img;
  for (int q = ((quarter_turns % 4) + 4) % 4; q > 0; --q) {
    PixelImage next(out.height, out.width);
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        const std::uint8_t* src = out.pixel(x, y);
        std::copy(src, src + 3, next.pixel(out.height - 1 - y, x));
      }
    }
    out = std::move(next);
  }
  return out;
}

/// Binary PPM (P6).
inline void write_ppm(std::ostream& out, const PixelImage& img) {
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
}

inline PixelImage read_ppm(std::istream& in) {
  std::string magic;
  int w = 0;
  int h = 0;
  int maxval = 0;
  if (!(in >> magic >> w >> h >> maxval) || magic != "P6" || maxval != 255 || w < 1 || h < 1) {
    throw Error("malformed PPM header");
  }
  in.get();
  PixelImage img(w, h);
  if (!in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()))) {
    throw Error("truncated PPM data");
  }
  return img;
}

inline void save_ppm(const std::string& path, const PixelImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path);
  write_ppm(out, img);
}

}  // namespace vrr
