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
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vrr/rules.hpp"

namespace vrr {

enum class PlanKind { kWin, kExplore, kExhausted, kTruncated };

inline std::string_view plan_kind_name(PlanKind k) {
  switch (k) {
    case PlanKind::kWin: return "win";
    case PlanKind::kExplore: return "explore";
    case PlanKind::kExhausted: return "exhausted";
    case PlanKind::kTruncated: return "truncated";
  }
  return "?";
}

struct PlanResult {
  PlanKind kind = PlanKind::kExhausted;
  std::vector<ActionId> actions;
  double predicted_reward = 0.0;
  std::size_t nodes_expanded = 0;
};

/// Hash set of grids with full comparison on hash collision.
class StateSet {
 public:
  bool insert(const ObjectGrid& grid) {
    auto& bucket = buckets_[hash_grid(grid)];
    if (std::find(bucket.begin(), bucket.end(), grid) != bucket.end()) return false;
    bucket.push_back(grid);
    ++size_;
    return true;
  }

  [[nodiscard]] bool contains(const ObjectGrid& grid) const {
    auto it = buckets_.find(hash_grid(grid));
    return it != buckets_.end() && std::find(it->second.begin(), it->second.end(), grid) != it->second.end();
  }

  [[nodiscard]] std::size_t size() const noexcept { return size_; }

 private:
  std::unordered_map<std::uint64_t, std::vector<ObjectGrid>> buckets_;
  std::size_t size_ = 0;
};

struct PlanOptions {
  std::size_t budget = 500'000;
  /// States that looked like wins but turned out not to end the episode;
  /// positive reward into them does not count.
  const StateSet* refuted_goals = nullptr;
  /// One line per expansion: `depth hash incoming_action`.
  std::ostream* trace = nullptr;
};

/// Breadth-first search over the learned world model.
///
/// Returns the shortest sequence reaching positive reward if one exists;
/// otherwise the shortest sequence ending in a transition the rules cannot
/// predict (ties: lower action id, then discovery order); otherwise
/// exhausted. Unknown transitions are leaves. If the node budget runs out
/// with no win, a pending exploration target is still returned, and
/// `kTruncated` is reported only when nothing was found.
inline PlanResult bfs_plan(const RuleSet& rules, const ObjectGrid& start, Pos agent, const PlanOptions& options = {}) {
  if (options.budget < 1) throw Error("bfs_plan: budget must be >= 1");
  struct Node {
    ObjectGrid state;
    Pos agent;
    int depth;
    int parent;
    ActionId action;
  };
  struct Unknown {
    int depth;
    ActionId action;
    int node;
  };
  std::vector<Node> nodes;
  StateSet seen;
  nodes.push_back({start, agent, 0, -1, -1});
  seen.insert(start);

  auto path_to = [&nodes](int node) {
    std::vector<ActionId> path;
    for (int i = node; nodes[static_cast<std::size_t>(i)].parent >= 0; i = nodes[static_cast<std::size_t>(i)].parent) {
      path.push_back(nodes[static_cast<std::size_t>(i)].action);
    }
    std::reverse(path.begin(), path.end());
    return path;
  };

  PlanResult result;
  std::optional<Unknown> unknown;
  const int actions = rules.actions();
  std::size_t head = 0;
  for (; head < nodes.size(); ++head) {
    if (result.nodes_expanded >= options.budget) break;
    ++result.nodes_expanded;
    const int depth = nodes[head].depth;
    if (options.trace != nullptr) {
      *options.trace << depth << ' ' << hash_grid(nodes[head].state) << ' ' << nodes[head].action << '\n';
    }
    for (ActionId a = 0; a < actions; ++a) {
      Prediction p = apply(rules, nodes[head].state, a, nodes[head].agent);
      if (!p.known()) {
        const Unknown u{depth + 1, a, static_cast<int>(head)};
        if (!unknown || u.depth < unknown->depth || (u.depth == unknown->depth && u.action < unknown->action)) {
          unknown = u;
        }
        continue;
      }
      const bool refuted = options.refuted_goals != nullptr && options.refuted_goals->contains(*p.next_state);
      if (p.reward > 0.0 && !refuted) {
        result.kind = PlanKind::kWin;
        result.actions = path_to(static_cast<int>(head));
        result.actions.push_back(a);
        result.predicted_reward = p.reward;
        return result;
      }
      if (seen.insert(*p.next_state)) {
        nodes.push_back({std::move(*p.next_state), p.next_agent, depth + 1, static_cast<int>(head), a});
      }
    }
  }
  if (unknown) {
    result.kind = PlanKind::kExplore;
    result.actions = path_to(unknown->node);
    result.actions.push_back(unknown->action);
    return result;
  }
  result.kind = head < nodes.size() ? PlanKind::kTruncated : PlanKind::kExhausted;
  return result;
}

/// Rolls `actions` through the world model, stopping after the first
/// unknown transition.
inline std::vector<Prediction> replay_plan(const RuleSet& rules, const ObjectGrid& start, Pos agent,
                                           const std::vector<ActionId>& actions) {
  if (actions.empty()) throw Error("replay_plan: empty action sequence");
  std::vector<Prediction> out;
  ObjectGrid state = start;
  for (ActionId a : actions) {
    Prediction p = apply(rules, state, a, agent);
    const bool known = p.known();
    if (known) {
      state = *p.next_state;
      agent = p.next_agent;
    }
    out.push_back(std::move(p));
    if (!known) break;
  }
  return out;
}

}  // namespace vrr
