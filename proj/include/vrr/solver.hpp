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

// Breadth-first search over the true game graph. This works on the simulator
// directly and knows nothing about learned rules.

#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "vrr/gridworld.hpp"

namespace vrr {

namespace detail {

inline std::string level_key(const Level& level) {
  std::string key;
  key.reserve(level.cells.size() + 2);
  for (Tile t : level.cells.cells()) key.push_back(static_cast<char>(t));
  key.push_back(static_cast<char>(level.facing));
  key.push_back(static_cast<char>(level.carrying));
  return key;
}

}  // namespace detail

struct SolveResult {
  std::optional<std::vector<ActionId>> solution;
  std::size_t states = 0;
  bool truncated = false;
};

/// Shortest winning action sequence, ignoring the episode step cap.
inline SolveResult solve_level(const Level& start, std::size_t max_states = 2'000'000) {
  struct Node {
    Level level;
    int parent;
    ActionId action;
  };
  SolveResult result;
  std::vector<Node> nodes;
  std::unordered_map<std::string, int> seen;
  Level root = start;
  root.steps = 0;
  root.done = false;
  nodes.push_back({root, -1, -1});
  seen.emplace(detail::level_key(root), 0);
  const int actions = action_count(start.kind);
  for (std::size_t head = 0; head < nodes.size(); ++head) {
    if (nodes.size() > max_states) {
      result.truncated = true;
      break;
    }
    for (ActionId a = 0; a < actions; ++a) {
      Level here = nodes[head].level;
      here.steps = 0;
      StepOutcome out = step(here, a);
      if (out.won) {
        std::vector<ActionId> path{a};
        for (int i = static_cast<int>(head); nodes[static_cast<std::size_t>(i)].parent >= 0;
             i = nodes[static_cast<std::size_t>(i)].parent) {
          path.push_back(nodes[static_cast<std::size_t>(i)].action);
        }
        std::reverse(path.begin(), path.end());
        result.solution = std::move(path);
        result.states = nodes.size();
        return result;
      }
      out.next_state.steps = 0;
      out.next_state.done = false;
      if (seen.emplace(detail::level_key(out.next_state), static_cast<int>(nodes.size())).second) {
        nodes.push_back({std::move(out.next_state), static_cast<int>(head), a});
      }
    }
  }
  result.states = nodes.size();
  return result;
}

/// Every non-terminal state reachable from `start` (BFS order, capped).
inline std::vector<Level> reachable_levels(const Level& start, std::size_t max_states = 200'000) {
  std::vector<Level> out;
  std::unordered_map<std::string, int> seen;
  Level root = start;
  root.steps = 0;
  root.done = false;
  out.push_back(root);
  seen.emplace(detail::level_key(root), 0);
  const int actions = action_count(start.kind);
  for (std::size_t head = 0; head < out.size() && out.size() < max_states; ++head) {
    for (ActionId a = 0; a < actions; ++a) {
      Level here = out[head];
      StepOutcome s = step(here, a);
      if (s.won) continue;
      s.next_state.steps = 0;
      s.next_state.done = false;
      if (seen.emplace(detail::level_key(s.next_state), 0).second) out.push_back(std::move(s.next_state));
    }
  }
  return out;
}

}  // namespace vrr
