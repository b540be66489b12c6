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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vrr {

/// Small-integer object identifier produced by tokenization.
using ObjectId = std::uint16_t;

/// Pattern value for a cell that lies outside the board.
inline constexpr ObjectId kOutside = 0xFFFF;

struct Pos {
  int row = 0;
  int col = 0;

  auto operator<=>(const Pos&) const = default;
};

inline constexpr Pos operator+(Pos a, Pos b) { return {a.row + b.row, a.col + b.col}; }
inline constexpr Pos operator-(Pos a, Pos b) { return {a.row - b.row, a.col - b.col}; }

/// Dense row-major 2-D array.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, T fill = T{})
      : height_(height), width_(width), cells_(static_cast<std::size_t>(height * width), fill) {
    if (height < 0 || width < 0) throw std::invalid_argument("negative grid dimension");
  }

  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] std::size_t size() const noexcept { return cells_.size(); }

  [[nodiscard]] bool contains(Pos p) const noexcept {
    return p.row >= 0 && p.col >= 0 && p.row < height_ && p.col < width_;
  }

  T& operator[](Pos p) { return cells_[index(p)]; }
  const T& operator[](Pos p) const { return cells_[index(p)]; }

  T& at(Pos p) {
    if (!contains(p)) throw std::out_of_range("grid position out of range");
    return cells_[index(p)];
  }
  const T& at(Pos p) const {
    if (!contains(p)) throw std::out_of_range("grid position out of range");
    return cells_[index(p)];
  }

  [[nodiscard]] T value_or(Pos p, T outside) const { return contains(p) ? cells_[index(p)] : outside; }

  [[nodiscard]] Pos pos_of(std::size_t flat) const noexcept {
    return {static_cast<int>(flat) / width_, static_cast<int>(flat) % width_};
  }

  std::span<T> cells() noexcept { return cells_; }
  std::span<const T> cells() const noexcept { return cells_; }

  bool operator==(const Grid&) const = default;

 private:
  [[nodiscard]] std::size_t index(Pos p) const noexcept {
    return static_cast<std::size_t>(p.row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(p.col);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<T> cells_;
};

using ObjectGrid = Grid<ObjectId>;

/// FNV-1a over the dimensions and cell values.
template <typename T>
[[nodiscard]] std::uint64_t hash_grid(const Grid<T>& grid) noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::uint64_t>(grid.height()));
  mix(static_cast<std::uint64_t>(grid.width()));
  for (const T& v : grid.cells()) {
    h ^= static_cast<std::uint64_t>(v) & 0xFF;
    h *= 1099511628211ULL;
    h ^= (static_cast<std::uint64_t>(v) >> 8) & 0xFF;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Base class for every error the library reports.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vrr
