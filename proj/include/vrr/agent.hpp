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

// The rule-learning agent: plan with the learned model, act, learn from what
// happened, repeat.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <tuple>
#include <vector>

#include "vrr/gridworld.hpp"
#include "vrr/image.hpp"
#include "vrr/perception.hpp"
#include "vrr/planner.hpp"
#include "vrr/rules.hpp"
#include "vrr/solver.hpp"
#include "vrr/trajectory.hpp"

namespace vrr {

/// One level family.
struct GameConfig {
  GameKind game = GameKind::kSokoban;
  int size = 7;
  int boxes = 1;
  std::vector<int> rotations{0};  // quarter turns, drawn uniformly per level
  RewardScheme reward;
};

inline Level make_level(const GameConfig& cfg, std::uint64_t seed) {
  if (cfg.game == GameKind::kSokoban) return generate_sokoban(seed, cfg.size, cfg.boxes);
  if (cfg.rotations.empty()) throw Error("rotation set is empty");
  Rng rng(derive_seed(seed, 0x0707));
  const int rotation = cfg.rotations[static_cast<std::size_t>(rng.uniform(0, static_cast<int>(cfg.rotations.size()) - 1))];
  return generate_doorkey(seed, cfg.size, rotation);
}

inline std::uint64_t train_level_seed(std::uint64_t seed, std::uint64_t index) { return derive_seed(seed, 1'000'000 + index); }
inline std::uint64_t eval_level_seed(std::uint64_t seed, std::uint64_t index) {
  return derive_seed(seed ^ 0x5EED'0000'E7A1ULL, 9'000'000 + index);
}
inline std::uint64_t demo_level_seed(std::uint64_t seed, std::uint64_t index) {
  return derive_seed(seed ^ 0xDE30'0000ULL, 5'000'000 + index);
}

struct AgentOptions {
  bool learn = true;
  std::size_t budget = 500'000;
  int sprite_px = 16;  // render size
  int cell_size = 16;  // tokenization size (normally inferred)
  /// Also learn each transition turned by one, two and three quarters.
  /// Needs body-relative actions, so DoorKey only.
  bool rotation_symmetry = false;
};

/// Learns a transition and, with `rotation_symmetry`, its three turned
/// copies. Object ids are turned by turning their tile pixels; a copy is
/// skipped when some tile's pixels are unknown.
inline void learn_transition(RuleSet& rules, const ObjectGrid& s, const ObjectGrid& s_next, ActionId action,
                             double reward, Pos agent, bool rotation_symmetry) {
  learn_rule(rules, s, s_next, action, reward, agent);
  if (!rotation_symmetry) return;
  if (rules.game() != GameKind::kDoorKey) throw Error("rotation symmetry needs body-relative actions");
  std::set<ObjectId> ids(s.cells().begin(), s.cells().end());
  ids.insert(s_next.cells().begin(), s_next.cells().end());
  for (int q = 1; q < 4; ++q) {
    std::map<ObjectId, ObjectId> turned;
    for (ObjectId id : ids) {
      const auto r = rules.vocabulary().rotated(id, q);
      if (!r) return;
      turned[id] = *r;
    }
    auto& group = rules.agent_group();
    for (auto [from, to] : turned) {
      if (std::find(group.begin(), group.end(), from) != group.end() &&
          std::find(group.begin(), group.end(), to) == group.end()) {
        group.push_back(to);
        std::sort(group.begin(), group.end());
      }
    }
    auto turn_grid = [&](const ObjectGrid& g) {
      ObjectGrid mapped = g;
      for (ObjectId& v : mapped.cells()) v = turned.at(v);
      return rotate_grid(mapped, q);
    };
    learn_rule(rules, turn_grid(s), turn_grid(s_next), action, reward, rotate_pos(agent, s.height(), s.width(), q));
  }
}

struct Perceived {
  ObjectGrid grid;
  Pos agent;
  ObjectId sprite = 0;
};

/// Render, tokenize with the rule set's vocabulary, then locate the agent.
/// A sprite never seen before can join the agent group when the old ones
/// vanish (e.g. the agent now carries a key).
inline Perceived perceive(const Level& level, RuleSet& rules, const AgentOptions& opt,
                          const ObjectGrid* previous = nullptr) {
  const auto first_new = static_cast<ObjectId>(rules.vocabulary().size());
  ObjectGrid grid = tokenize(render(level, opt.sprite_px), opt.cell_size, rules.vocabulary());
  const bool comparable = previous != nullptr && previous->width() == grid.width() && previous->height() == grid.height();
  extend_agent_group(grid, comparable ? *previous : ObjectGrid{}, comparable ? 0 : first_new, rules.agent_group());
  const AgentLocation loc = locate_agent(grid, rules.agent_group());
  return {std::move(grid), loc.pos, loc.sprite};
}

enum class EpisodeOutcome { kWin, kGaveUp, kStepCap, kNeedsLearning };

inline std::string_view outcome_name(EpisodeOutcome o) {
  switch (o) {
    case EpisodeOutcome::kWin: return "win";
    case EpisodeOutcome::kGaveUp: return "gave_up";
    case EpisodeOutcome::kStepCap: return "step_cap";
    case EpisodeOutcome::kNeedsLearning: return "needs_learning";
  }
  return "?";
}

struct EpisodeLog {
  std::vector<TrajectoryRecord> records;
  EpisodeOutcome outcome = EpisodeOutcome::kGaveUp;
  double total_reward = 0.0;
  std::size_t env_steps = 0;
  std::size_t rules_learned = 0;
  std::size_t plans = 0;
  std::size_t nodes_expanded = 0;
  std::vector<PlanKind> plan_kinds;
  /// Rule count after each environment step.
  std::vector<std::size_t> rule_counts;
};

/// Plays one level. Win plans run to the end; after an exploration plan
/// (or any step whose outcome the model got wrong) the agent replans from
/// where it stands. With `learn` off an exploration plan ends the episode
/// after its known prefix.
inline EpisodeLog run_episode(const Level& start, RuleSet& rules, const AgentOptions& opt, int episode = 0,
                              const RewardScheme& reward = {}) {
  EpisodeLog log;
  Level level = start;
  Perceived cur = perceive(level, rules, opt);
  StateSet refuted;
  const std::size_t rules_before = rules.size();
  bool won = false;
  std::optional<EpisodeOutcome> stopped;
  while (!level.done && !stopped) {
    const PlanResult plan = bfs_plan(rules, cur.grid, cur.agent, {opt.budget, &refuted, nullptr});
    ++log.plans;
    log.nodes_expanded += plan.nodes_expanded;
    log.plan_kinds.push_back(plan.kind);
    if (plan.kind == PlanKind::kExhausted || plan.kind == PlanKind::kTruncated) {
      stopped = EpisodeOutcome::kGaveUp;
      break;
    }
    std::vector<ActionId> to_run = plan.actions;
    if (plan.kind == PlanKind::kExplore && !opt.learn) {
      to_run.pop_back();
      stopped = EpisodeOutcome::kNeedsLearning;
    }
    for (ActionId a : to_run) {
      const Prediction pred = apply(rules, cur.grid, a, cur.agent);
      const StepOutcome out = step(level, a, reward);
      Perceived next = perceive(out.next_state, rules, opt, &cur.grid);
      log.records.push_back({episode, out.steps, a, out.reward, out.done, cur.agent, cur.grid, next.grid});
      if (opt.learn) learn_transition(rules, cur.grid, next.grid, a, out.reward, cur.agent, opt.rotation_symmetry);
      log.rule_counts.push_back(rules.size());
      log.total_reward += out.reward;
      ++log.env_steps;
      const bool matched = pred.known() && *pred.next_state == next.grid && pred.reward == out.reward;
      if (pred.known() && pred.reward > 0.0 && !out.won) refuted.insert(*pred.next_state);
      level = out.next_state;
      cur = std::move(next);
      won = out.won;
      if (level.done || !matched) break;
    }
  }
  log.rules_learned = rules.size() - rules_before;
  if (won) {
    log.outcome = EpisodeOutcome::kWin;
  } else if (stopped) {
    log.outcome = *stopped;
  } else {
    log.outcome = EpisodeOutcome::kStepCap;
  }
  return log;
}

// ---------------------------------------------------------------------------
// Training

struct TrainOptions {
  std::size_t max_steps = 20'000;
  int window = 10;
  int warmup_steps = 50;
  AgentOptions agent;
};

struct TrainingRun {
  std::size_t total_steps = 0;
  std::size_t warmup_steps = 0;
  std::vector<double> episode_returns;
  std::vector<std::size_t> episode_steps;
  std::vector<std::size_t> episode_end_step;  // cumulative steps when each episode ended
  std::vector<EpisodeOutcome> outcomes;
  std::vector<std::size_t> rule_curve;  // rule count after env step i+1
  std::optional<std::size_t> converged_at;
  std::size_t nodes_expanded = 0;
  int cell_size = 0;
  AgentIdentity identity;
  std::vector<std::uint64_t> level_seeds;  // every level generated, in order
};

struct TrainResult {
  RuleSet rules;
  TrainingRun run;
  TrajectoryLog log;  // every transition, warm-up included
};

namespace detail {

// Turns rendered frames into grids and fills in agent positions for a batch
// of recorded transitions. Used for the warm-up and for demonstrations.
struct Recorded {
  Level before;
  ActionId action;
  StepOutcome outcome;
  int episode;
};

inline std::vector<TrajectoryRecord> tokenize_recording(const std::vector<Recorded>& steps, RuleSet& rules,
                                                        const AgentOptions& opt, AgentIdentity* identity_out) {
  std::vector<Transition> pairs;
  for (const auto& r : steps) {
    pairs.emplace_back(tokenize(render(r.before, opt.sprite_px), opt.cell_size, rules.vocabulary()),
                       tokenize(render(r.outcome.next_state, opt.sprite_px), opt.cell_size, rules.vocabulary()));
  }
  const AgentIdentity identity = identify_agent(pairs);
  if (identity_out != nullptr) *identity_out = identity;
  rules.agent_group() = identity.group;
  std::vector<ObjectGrid> frames;
  for (const auto& [s, s_next] : pairs) {
    frames.push_back(s);
    frames.push_back(s_next);
  }
  complete_agent_group(frames, rules.agent_group());
  std::vector<TrajectoryRecord> records;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const ObjectGrid empty;
    const ObjectGrid& prev = i > 0 && steps[i - 1].episode == steps[i].episode ? pairs[i - 1].first : empty;
    extend_agent_group(pairs[i].first, prev, 0, rules.agent_group());
    extend_agent_group(pairs[i].second, pairs[i].first, 0, rules.agent_group());
    const Pos agent = locate_agent(pairs[i].first, rules.agent_group()).pos;
    records.push_back({steps[i].episode, steps[i].outcome.steps, steps[i].action, steps[i].outcome.reward,
                       steps[i].outcome.done, agent, pairs[i].first, pairs[i].second});
  }
  return records;
}

}  // namespace detail

/// Trains from an empty rule set on freshly generated levels until the
/// last `window` episodes all won, or the step budget is spent. A warm-up of
/// uniformly random actions first fixes the sprite size and agent identity;
/// those steps count and are learned from as well.
inline TrainResult train_from_scratch(const GameConfig& cfg, std::uint64_t seed, const TrainOptions& opt = {}) {
  TrainResult result{RuleSet(cfg.game), {}, {}};
  RuleSet& rules = result.rules;
  TrainingRun& run = result.run;
  AgentOptions agent = opt.agent;
  agent.learn = true;
  std::uint64_t level_index = 0;
  auto next_level = [&] {
    run.level_seeds.push_back(train_level_seed(seed, level_index++));
    return make_level(cfg, run.level_seeds.back());
  };

  Rng rng(derive_seed(seed, 0xA11CE));
  std::vector<detail::Recorded> warmup;
  std::vector<PixelImage> frames;
  Level level = next_level();
  frames.push_back(render(level, agent.sprite_px));
  int warm_episode = 0;
  for (int i = 0; i < opt.warmup_steps; ++i) {
    const ActionId a = rng.uniform(0, action_count(cfg.game) - 1);
    StepOutcome out = step(level, a, cfg.reward);
    warmup.push_back({level, a, out, warm_episode});
    frames.push_back(render(out.next_state, agent.sprite_px));
    level = out.done ? next_level() : out.next_state;
    if (out.done) ++warm_episode;
  }
  agent.cell_size = infer_cell_size(frames);
  run.cell_size = agent.cell_size;
  if (!warmup.empty()) {
    auto records = detail::tokenize_recording(warmup, rules, agent, &run.identity);
    for (const auto& r : records) {
      learn_transition(rules, r.before, r.after, r.action, r.reward, r.agent, agent.rotation_symmetry);
      run.rule_curve.push_back(rules.size());
    }
    result.log.records = std::move(records);
  }
  run.total_steps = run.warmup_steps = warmup.size();

  for (int episode = 1; run.total_steps < opt.max_steps; ++episode) {
    const Level start = next_level();
    EpisodeLog ep = run_episode(start, rules, agent, episode, cfg.reward);
    run.total_steps += ep.env_steps;
    run.nodes_expanded += ep.nodes_expanded;
    run.rule_curve.insert(run.rule_curve.end(), ep.rule_counts.begin(), ep.rule_counts.end());
    run.episode_returns.push_back(ep.total_reward);
    run.episode_steps.push_back(ep.env_steps);
    run.episode_end_step.push_back(run.total_steps);
    run.outcomes.push_back(ep.outcome);
    for (auto& r : ep.records) result.log.records.push_back(std::move(r));
    const auto n = static_cast<int>(run.episode_returns.size());
    if (n >= opt.window &&
        std::all_of(run.episode_returns.end() - opt.window, run.episode_returns.end(), [](double r) { return r >= 1.0; })) {
      run.converged_at = run.total_steps;
      break;
    }
  }
  result.log.game = cfg.game;
  result.log.width = result.log.height = cfg.size;
  result.log.vocab = rules.vocabulary();
  result.log.agents = rules.agent_group();
  return result;
}

/// Learns from every record of a log, in order, without touching an
/// environment. An empty rule set adopts the log's vocabulary; otherwise the
/// vocabularies must match. Returns the number of rules added.
inline std::size_t train_from_demonstrations(const TrajectoryLog& log, RuleSet& rules, bool rotation_symmetry = false) {
  if (log.game != rules.game()) throw FormatError("demonstration is for a different game");
  if (rules.empty() && rules.vocabulary().empty()) {
    rules.vocabulary() = log.vocab;
    rules.agent_group() = log.agents;
  } else if (rules.vocabulary().hash() != log.vocab.hash()) {
    throw FormatError("vocabulary hash mismatch between demonstration and rule set");
  }
  const std::size_t before = rules.size();
  for (const TrajectoryRecord& r : log.records) {
    learn_transition(rules, r.before, r.after, r.action, r.reward, r.agent, rotation_symmetry);
  }
  return rules.size() - before;
}

// ---------------------------------------------------------------------------
// Scripted demonstrator

namespace detail {

using Signature = std::tuple<int, int, int, int>;

inline Signature transition_signature(const Level& level, ActionId a) {
  if (level.kind == GameKind::kSokoban) {
    const Pos d = dir_offset(sokoban_action_dir(a));
    const Tile front = level.cells.value_or(level.agent + d, Tile::kWall);
    const bool box = front == Tile::kBox || front == Tile::kBoxOnTarget;
    const int beyond = box ? static_cast<int>(level.cells.value_or(level.agent + d + d, Tile::kWall)) : -1;
    return {a, static_cast<int>(level.cells[level.agent]), static_cast<int>(front), beyond};
  }
  const Tile front = level.cells.value_or(level.agent + dir_offset(level.facing), Tile::kWall);
  return {a, static_cast<int>(level.cells[level.agent]), static_cast<int>(front), -1};
}

}  // namespace detail

/// Stands in for a human player: solves generated levels optimally and picks
/// the solutions that show the most not-yet-demonstrated kinds of move per
/// step, until nothing new fits within `max_steps`.
inline TrajectoryLog record_demonstration(const GameConfig& cfg, std::uint64_t seed, std::size_t max_steps = 120,
                                          int sprite_px = 16, int candidates = 200) {
  struct Candidate {
    std::vector<detail::Recorded> steps;
    std::set<detail::Signature> sigs;
  };
  std::vector<Candidate> pool;
  for (int k = 0; k < candidates; ++k) {
    const Level level = make_level(cfg, demo_level_seed(seed, static_cast<std::uint64_t>(k)));
    const SolveResult solved = solve_level(level, 400'000);
    if (!solved.solution || solved.solution->size() > max_steps) continue;
    Candidate c;
    Level l = level;
    for (ActionId a : *solved.solution) {
      c.sigs.insert(detail::transition_signature(l, a));
      StepOutcome out = step(l, a, cfg.reward);
      c.steps.push_back({l, a, out, 0});
      l = out.next_state;
    }
    pool.push_back(std::move(c));
  }
  std::set<detail::Signature> covered;
  std::vector<detail::Recorded> steps;
  std::vector<bool> used(pool.size(), false);
  for (int episode = 0;; ++episode) {
    std::optional<std::size_t> pick;
    double best = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (used[i] || steps.size() + pool[i].steps.size() > max_steps) continue;
      const auto fresh = static_cast<double>(std::count_if(pool[i].sigs.begin(), pool[i].sigs.end(),
                                                           [&](const auto& sig) { return !covered.contains(sig); }));
      const double ratio = fresh / static_cast<double>(pool[i].steps.size());
      if (ratio > best) {
        best = ratio;
        pick = i;
      }
    }
    if (!pick) break;
    used[*pick] = true;
    covered.insert(pool[*pick].sigs.begin(), pool[*pick].sigs.end());
    for (auto r : pool[*pick].steps) {
      r.episode = episode;
      steps.push_back(std::move(r));
    }
  }
  TrajectoryLog log;
  log.game = cfg.game;
  log.width = log.height = cfg.size;
  if (steps.empty()) return log;
  std::vector<PixelImage> frames;
  for (std::size_t i = 0; i < steps.size() && frames.size() < 8; ++i) frames.push_back(render(steps[i].before, sprite_px));
  AgentOptions opt;
  opt.sprite_px = sprite_px;
  opt.cell_size = infer_cell_size(frames);
  RuleSet scratch(cfg.game);
  log.records = detail::tokenize_recording(steps, scratch, opt, nullptr);
  log.vocab = scratch.vocabulary();
  log.agents = scratch.agent_group();
  return log;
}

}  // namespace vrr
