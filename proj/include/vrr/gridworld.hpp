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

// Sokoban and DoorKey grid games with deterministic dynamics and seedable
// procedural level generation.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vrr/grid.hpp"
#include "vrr/rng.hpp"

namespace vrr {

enum class GameKind : std::uint8_t { kSokoban = 0, kDoorKey = 1 };

inline std::string_view game_name(GameKind kind) {
  return kind == GameKind::kSokoban ? "sokoban" : "doorkey";
}

inline GameKind parse_game(std::string_view name) {
  if (name == "sokoban") return GameKind::kSokoban;
  if (name == "doorkey") return GameKind::kDoorKey;
  throw Error("unknown game kind: " + std::string(name));
}

/// Ground-truth cell contents. Each value renders to one sprite.
enum class Tile : std::uint8_t {
  kWall,
  kFloor,
  kTarget,
  kBox,
  kBoxOnTarget,
  kAgent,
  kAgentOnTarget,
  kKey,
  kDoor,
  kGoal,
  kAgentN,
  kAgentE,
  kAgentS,
  kAgentW,
  kAgentNKey,
  kAgentEKey,
  kAgentSKey,
  kAgentWKey,
};
inline constexpr int kTileCount = 18;

enum class Dir : std::uint8_t { kN = 0, kE = 1, kS = 2, kW = 3 };

inline constexpr Pos dir_offset(Dir d) noexcept {
  constexpr std::array<Pos, 4> kOffsets{{{-1, 0}, {0, 1}, {1, 0}, {0, -1}}};
  return kOffsets[static_cast<int>(d)];
}

/// Quarter turns clockwise.
inline constexpr Dir turn(Dir d, int quarter_turns) noexcept {
  return static_cast<Dir>(((static_cast<int>(d) + quarter_turns) % 4 + 4) % 4);
}

using ActionId = int;

namespace sokoban {
inline constexpr ActionId kUp = 0;
inline constexpr ActionId kDown = 1;
inline constexpr ActionId kLeft = 2;
inline constexpr ActionId kRight = 3;
}  // namespace sokoban

namespace doorkey {
inline constexpr ActionId kTurnLeft = 0;
inline constexpr ActionId kTurnRight = 1;
inline constexpr ActionId kForward = 2;
inline constexpr ActionId kPickup = 3;
inline constexpr ActionId kToggle = 4;
}  // namespace doorkey

inline int action_count(GameKind kind) noexcept { return kind == GameKind::kSokoban ? 4 : 5; }

inline std::string_view action_name(GameKind kind, ActionId a) {
  static constexpr std::array<std::string_view, 4> kSokoban{"up", "down", "left", "right"};
  static constexpr std::array<std::string_view, 5> kDoorKey{"turn_left", "turn_right", "forward", "pickup",
                                                             "toggle"};
  if (a < 0 || a >= action_count(kind)) throw Error("invalid action id " + std::to_string(a));
  return kind == GameKind::kSokoban ? kSokoban[static_cast<std::size_t>(a)] : kDoorKey[static_cast<std::size_t>(a)];
}

inline Dir sokoban_action_dir(ActionId a) {
  constexpr std::array<Dir, 4> kDirs{Dir::kN, Dir::kS, Dir::kW, Dir::kE};
  return kDirs[static_cast<std::size_t>(a)];
}

inline ActionId sokoban_dir_action(Dir d) {
  constexpr std::array<ActionId, 4> kActions{sokoban::kUp, sokoban::kRight, sokoban::kDown, sokoban::kLeft};
  return kActions[static_cast<std::size_t>(d)];
}

inline Tile doorkey_agent_tile(Dir facing, bool carrying) {
  return static_cast<Tile>(static_cast<int>(carrying ? Tile::kAgentNKey : Tile::kAgentN) + static_cast<int>(facing));
}

inline bool is_agent_tile(Tile t) noexcept {
  return t == Tile::kAgent || t == Tile::kAgentOnTarget || (t >= Tile::kAgentN && t <= Tile::kAgentWKey);
}

/// Reward settings. Sparse (+1 on win, 0 otherwise) unless `shaped` is set.
struct RewardScheme {
  bool shaped = false;
  double win = 1.0;
  double step_penalty = -0.01;
  double box_on_target = 0.1;
};

struct Level {
  GameKind kind = GameKind::kSokoban;
  std::uint64_t seed = 0;
  Grid<Tile> cells;
  Pos agent;
  Dir facing = Dir::kN;  // fixed sentinel for Sokoban
  bool carrying = false;
  int rotation = 0;  // quarter turns applied at generation
  int boxes = 0;
  int steps = 0;
  bool done = false;

  [[nodiscard]] int width() const noexcept { return cells.width(); }
  [[nodiscard]] int height() const noexcept { return cells.height(); }
  [[nodiscard]] int step_cap() const noexcept { return 10 * width() * height(); }

  bool operator==(const Level&) const = default;
};

struct StepOutcome {
  Level next_state;
  double reward = 0.0;
  bool done = false;
  bool won = false;
  int steps = 0;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline bool sokoban_free(Tile t) noexcept { return t == Tile::kFloor || t == Tile::kTarget; }
inline bool sokoban_box(Tile t) noexcept { return t == Tile::kBox || t == Tile::kBoxOnTarget; }
inline bool on_target(Tile t) noexcept {
  return t == Tile::kTarget || t == Tile::kBoxOnTarget || t == Tile::kAgentOnTarget;
}

inline StepOutcome step_sokoban(const Level& level, ActionId action, const RewardScheme& scheme) {
  StepOutcome out{level};
  Level& next = out.next_state;
  const Pos d = dir_offset(sokoban_action_dir(action));
  const Pos front = level.agent + d;
  const Pos beyond = front + d;
  const Tile front_tile = level.cells.value_or(front, Tile::kWall);
  auto leave = [&](Pos p) { next.cells[p] = on_target(next.cells[p]) ? Tile::kTarget : Tile::kFloor; };
  auto enter = [&](Pos p) {
    next.cells[p] = on_target(next.cells[p]) ? Tile::kAgentOnTarget : Tile::kAgent;
    next.agent = p;
  };
  int delta_on_target = 0;
  if (sokoban_free(front_tile)) {
    leave(level.agent);
    enter(front);
  } else if (sokoban_box(front_tile) && sokoban_free(level.cells.value_or(beyond, Tile::kWall))) {
    const bool was_on = front_tile == Tile::kBoxOnTarget;
    const bool now_on = level.cells[beyond] == Tile::kTarget;
    next.cells[beyond] = now_on ? Tile::kBoxOnTarget : Tile::kBox;
    next.cells[front] = was_on ? Tile::kTarget : Tile::kFloor;
    leave(level.agent);
    enter(front);
    delta_on_target = static_cast<int>(now_on) - static_cast<int>(was_on);
  }
  const bool won = std::none_of(next.cells.cells().begin(), next.cells.cells().end(),
                                [](Tile t) { return t == Tile::kBox; });
  out.won = won;
  if (scheme.shaped) {
    out.reward = scheme.step_penalty + scheme.box_on_target * delta_on_target + (won ? scheme.win : 0.0);
  } else {
    out.reward = won ? scheme.win : 0.0;
  }
  return out;
}

inline StepOutcome step_doorkey(const Level& level, ActionId action, const RewardScheme& scheme) {
  StepOutcome out{level};
  Level& next = out.next_state;
  const Pos front = level.agent + dir_offset(level.facing);
  const Tile front_tile = level.cells.value_or(front, Tile::kWall);
  switch (action) {
    case doorkey::kTurnLeft:
      next.facing = turn(level.facing, -1);
      break;
    case doorkey::kTurnRight:
      next.facing = turn(level.facing, 1);
      break;
    case doorkey::kForward:
      if (front_tile == Tile::kFloor || front_tile == Tile::kGoal) {
        next.cells[level.agent] = Tile::kFloor;
        next.agent = front;
        out.won = front_tile == Tile::kGoal;
      }
      break;
    case doorkey::kPickup:
      if (front_tile == Tile::kKey && !level.carrying) {
        next.cells[front] = Tile::kFloor;
        next.carrying = true;
      }
      break;
    case doorkey::kToggle:
      if (front_tile == Tile::kDoor && level.carrying) next.cells[front] = Tile::kFloor;
      break;
    default:
      break;
  }
  next.cells[next.agent] = doorkey_agent_tile(next.facing, next.carrying);
  if (scheme.shaped) {
    out.reward = scheme.step_penalty + (out.won ? scheme.win : 0.0);
  } else {
    out.reward = out.won ? scheme.win : 0.0;
  }
  return out;
}

}  // namespace detail

/// Advances the game by one action. Pure: the input level is not modified.
inline StepOutcome step(const Level& level, ActionId action, const RewardScheme& scheme = {}) {
  if (action < 0 || action >= action_count(level.kind)) {
    throw Error("invalid action id " + std::to_string(action) + " for " + std::string(game_name(level.kind)));
  }
  if (level.done) throw Error("step called on a terminal level");
  StepOutcome out = level.kind == GameKind::kSokoban ? detail::step_sokoban(level, action, scheme)
                                                     : detail::step_doorkey(level, action, scheme);
  out.next_state.steps = level.steps + 1;
  out.steps = out.next_state.steps;
  out.done = out.won || out.next_state.steps >= level.step_cap();
  out.next_state.done = out.done;
  return out;
}

// ---------------------------------------------------------------------------
// Rotation

inline Pos rotate_pos(Pos p, int height, int width, int quarter_turns) {
  int q = ((quarter_turns % 4) + 4) % 4;
  for (; q > 0; --q) {
    p = {p.col, height - 1 - p.row};
    std::swap(height, width);
  }
  return p;
}

template <typename T>
Grid<T> rotate_grid(const Grid<T>& grid, int quarter_turns) {
  const int q = ((quarter_turns % 4) + 4) % 4;
  const bool swap_dims = q % 2 == 1;
  Grid<T> out(swap_dims ? grid.width() : grid.height(), swap_dims ? grid.height() : grid.width());
  for (int r = 0; r < grid.height(); ++r) {
    for (int c = 0; c < grid.width(); ++c) {
      out[rotate_pos({r, c}, grid.height(), grid.width(), q)] = grid[{r, c}];
    }
  }
  return out;
}

/// Rotates the whole board and the agent's heading clockwise.
inline Level rotate_level(const Level& level, int quarter_turns) {
  Level out = level;
  out.cells = rotate_grid(level.cells, quarter_turns);
  out.agent = rotate_pos(level.agent, level.height(), level.width(), quarter_turns);
  if (level.kind == GameKind::kDoorKey) {
    out.facing = turn(level.facing, quarter_turns);
    out.cells[out.agent] = doorkey_agent_tile(out.facing, out.carrying);
  }
  out.rotation = ((level.rotation + quarter_turns) % 4 + 4) % 4;
  return out;
}

/// Maps an action onto its counterpart on a board rotated clockwise.
/// DoorKey actions are body-relative and unchanged.
inline ActionId rotate_action(GameKind kind, ActionId a, int quarter_turns) {
  if (kind == GameKind::kDoorKey) return a;
  return sokoban_dir_action(turn(sokoban_action_dir(a), quarter_turns));
}

// ---------------------------------------------------------------------------
// Generation

namespace detail {

// Random-walk room carving with small brushes, after the gym-sokoban topology
// generator.
inline Grid<Tile> carve_room(int size, Rng& rng) {
  Grid<Tile> room(size, size, Tile::kWall);
  const int interior = (size - 2) * (size - 2);
  const int walk_steps = std::max(4, static_cast<int>(1.5 * interior));
  static constexpr std::array<std::array<Pos, 4>, 4> kBrushes{{
      {{{0, 0}, {0, 0}, {0, 0}, {0, 0}}},
      {{{0, 0}, {0, 1}, {0, 0}, {0, 1}}},
      {{{0, 0}, {1, 0}, {0, 0}, {1, 0}}},
      {{{0, 0}, {0, 1}, {1, 0}, {1, 1}}},
  }};
  Pos p{rng.uniform(1, size - 2), rng.uniform(1, size - 2)};
  Dir d = static_cast<Dir>(rng.uniform(0, 3));
  for (int i = 0; i < walk_steps; ++i) {
    if (rng.chance(0.35)) d = static_cast<Dir>(rng.uniform(0, 3));
    const Pos n = p + dir_offset(d);
    if (n.row >= 1 && n.col >= 1 && n.row <= size - 2 && n.col <= size - 2) p = n;
    for (Pos b : kBrushes[static_cast<std::size_t>(rng.uniform(0, 3))]) {
      const Pos c = p + b;
      if (c.row >= 1 && c.col >= 1 && c.row <= size - 2 && c.col <= size - 2) room[c] = Tile::kFloor;
    }
  }
  return room;
}

}  // namespace detail

/// Solvable Sokoban level built by reverse play: boxes start on their
/// targets and are pulled off by a random walk of the agent.
inline Level generate_sokoban(std::uint64_t seed, int size, int n_boxes) {
  if (size < 5) throw Error("sokoban size must be >= 5");
  if (n_boxes < 1 || n_boxes > (size - 2) * (size - 2) / 4) throw Error("sokoban box count out of range");
  constexpr int kMaxAttempts = 200;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    Grid<Tile> room = detail::carve_room(size, rng);
    std::vector<Pos> floor;
    for (int r = 0; r < size; ++r) {
      for (int c = 0; c < size; ++c) {
        if (room[{r, c}] == Tile::kFloor) floor.push_back({r, c});
      }
    }
    if (static_cast<int>(floor.size()) < 2 * n_boxes + 3) continue;
    rng.shuffle(floor);
    std::vector<Pos> targets(floor.begin(), floor.begin() + n_boxes);
    std::vector<Pos> boxes = targets;
    Pos player = floor[static_cast<std::size_t>(n_boxes)];
    for (Pos t : targets) room[t] = Tile::kTarget;

    auto box_at = [&boxes](Pos p) { return std::find(boxes.begin(), boxes.end(), p); };
    auto is_free = [&](Pos p) { return room[p] != Tile::kWall && box_at(p) == boxes.end(); };
    auto score = [&]() {
      int total = 0;
      for (std::size_t i = 0; i < boxes.size(); ++i) {
        if (room[boxes[i]] == Tile::kTarget) return -1;
        total += std::abs(boxes[i].row - targets[i].row) + std::abs(boxes[i].col - targets[i].col);
      }
      return total;
    };

    int best_score = 0;
    std::vector<Pos> best_boxes;
    Pos best_player{};
    const int reverse_steps = 30 * (size - 2) * (size - 2) / 2 + 50 * n_boxes;
    for (int i = 0; i < reverse_steps; ++i) {
      const Pos d = dir_offset(static_cast<Dir>(rng.uniform(0, 3)));
      const Pos to = player + d;
      if (!is_free(to)) continue;
      const Pos behind = player - d;
      auto pulled = box_at(behind);
      const bool pull = pulled != boxes.end() && rng.chance(0.8);
      if (pull) *pulled = player;
      player = to;
      if (pull) {
        const int s = score();
        if (s > best_score) {
          best_score = s;
          best_boxes = boxes;
          best_player = player;
        }
      }
    }
    if (best_score <= 0) continue;

    Level level;
    level.kind = GameKind::kSokoban;
    level.seed = seed;
    level.cells = room;
    for (Pos b : best_boxes) level.cells[b] = level.cells[b] == Tile::kTarget ? Tile::kBoxOnTarget : Tile::kBox;
    level.agent = best_player;
    level.cells[best_player] = room[best_player] == Tile::kTarget ? Tile::kAgentOnTarget : Tile::kAgent;
    level.boxes = n_boxes;
    return level;
  }
  throw GenerationError("sokoban generation failed for size " + std::to_string(size) + " with " +
                        std::to_string(n_boxes) + " boxes");
}

/// DoorKey layout: a full-height wall with one locked door splits the board,
/// agent and key start on the left, goal in the bottom-right corner. The
/// finished board is rotated clockwise by `quarter_turns`.
inline Level generate_doorkey(std::uint64_t seed, int size, int quarter_turns = 0) {
  if (size < 5) throw Error("doorkey size must be >= 5");
  Rng rng(seed);
  Level level;
  level.kind = GameKind::kDoorKey;
  level.seed = seed;
  level.cells = Grid<Tile>(size, size, Tile::kFloor);
  for (int i = 0; i < size; ++i) {
    level.cells[{0, i}] = level.cells[{size - 1, i}] = Tile::kWall;
    level.cells[{i, 0}] = level.cells[{i, size - 1}] = Tile::kWall;
  }
  const int split = rng.uniform(2, size - 3);
  for (int r = 1; r < size - 1; ++r) level.cells[{r, split}] = Tile::kWall;
  level.cells[{rng.uniform(1, size - 2), split}] = Tile::kDoor;
  level.cells[{size - 2, size - 2}] = Tile::kGoal;

  std::vector<Pos> left;
  for (int r = 1; r < size - 1; ++r) {
    for (int c = 1; c < split; ++c) left.push_back({r, c});
  }
  rng.shuffle(left);
  level.agent = left[0];
  level.cells[left[1]] = Tile::kKey;
  level.facing = static_cast<Dir>(rng.uniform(0, 3));
  level.cells[level.agent] = doorkey_agent_tile(level.facing, false);
  level.boxes = 0;
  return quarter_turns % 4 == 0 ? level : rotate_level(level, quarter_turns);
}

// ---------------------------------------------------------------------------
// Plain-text serialization: header `kind seed width height`, then one row per
// line using the character table below.

inline char tile_char(Tile t) {
  static constexpr std::string_view kChars = "#-.$*@+KLG^>v<NESW";
  return kChars[static_cast<std::size_t>(t)];
}

inline Tile char_tile(char ch) {
  static constexpr std::string_view kChars = "#-.$*@+KLG^>v<NESW";
  const auto i = kChars.find(ch);
  if (i == std::string_view::npos) throw Error(std::string("unknown level character '") + ch + "'");
  return static_cast<Tile>(i);
}

inline void write_level(std::ostream& out, const Level& level) {
  out << game_name(level.kind) << ' ' << level.seed << ' ' << level.width() << ' ' << level.height() << '\n';
  for (int r = 0; r < level.height(); ++r) {
    for (int c = 0; c < level.width(); ++c) out << tile_char(level.cells[{r, c}]);
    out << '\n';
  }
}

inline std::string level_to_string(const Level& level) {
  std::ostringstream out;
  write_level(out, level);
  return out.str();
}

inline Level read_level(std::istream& in) {
  std::string kind;
  Level level;
  int width = 0;
  int height = 0;
  if (!(in >> kind >> level.seed >> width >> height)) throw Error("malformed level header");
  if (width < 1 || height < 1) throw Error("malformed level dimensions");
  level.kind = parse_game(kind);
  level.cells = Grid<Tile>(height, width);
  std::string line;
  std::getline(in, line);
  int agents = 0;
  for (int r = 0; r < height; ++r) {
    if (!std::getline(in, line) || static_cast<int>(line.size()) < width) throw Error("malformed level row");
    for (int c = 0; c < width; ++c) {
      const Tile t = char_tile(line[static_cast<std::size_t>(c)]);
      level.cells[{r, c}] = t;
      if (t == Tile::kBox || t == Tile::kBoxOnTarget) ++level.boxes;
      if (is_agent_tile(t)) {
        ++agents;
        level.agent = {r, c};
        if (t >= Tile::kAgentN) {
          const int v = static_cast<int>(t) - static_cast<int>(Tile::kAgentN);
          level.facing = static_cast<Dir>(v % 4);
          level.carrying = v >= 4;
        }
      }
    }
  }
  if (agents != 1) throw Error("level must contain exactly one agent");
  return level;
}

inline Level level_from_string(const std::string& text) {
  std::istringstream in(text);
  return read_level(in);
}

}  // namespace vrr
