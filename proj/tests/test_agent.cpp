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

#include <gtest/gtest.h>

#include "vrr/agent.hpp"
#include "vrr/solver.hpp"
#include "vrr/trajectory.hpp"

namespace vrr {
namespace {

const GameConfig kSokoban7{GameKind::kSokoban, 7, 1, {0}, {}};
const GameConfig kDoorKey6{GameKind::kDoorKey, 6, 1, {0}, {}};

const TrainResult& trained_sokoban() {
  static const TrainResult r = train_from_scratch(kSokoban7, 0);
  return r;
}

TEST(Train, SameSeedSameRules) {
  TrainOptions opt;
  opt.max_steps = 3000;
  const TrainResult a = train_from_scratch(kDoorKey6, 5, opt);
  const TrainResult b = train_from_scratch(kDoorKey6, 5, opt);
  EXPECT_EQ(rules_to_string(a.rules), rules_to_string(b.rules));
  EXPECT_EQ(a.run.episode_returns, b.run.episode_returns);
  EXPECT_EQ(a.run.rule_curve, b.run.rule_curve);
  EXPECT_EQ(trajectory_to_string(a.log), trajectory_to_string(b.log));
}

TEST(Train, ConvergesAndRecordsWarmup) {
  const TrainResult& r = trained_sokoban();
  ASSERT_TRUE(r.run.converged_at.has_value());
  EXPECT_EQ(r.run.warmup_steps, 50);
  EXPECT_EQ(r.run.cell_size, 16);
  EXPECT_EQ(r.log.records.size(), static_cast<std::size_t>(r.run.total_steps));
  EXPECT_GE(r.run.episode_returns.size(), 10u);
}

TEST(Episode, GivesUpOnWedgedBoxWithoutActing) {
  const Level wedged = level_from_string(
      "sokoban 0 7 5\n"
      "#######\n"
      "#$----#\n"
      "#-----#\n"
      "#--@-.#\n"
      "#######\n");
  const SolveResult proof = solve_level(wedged);
  ASSERT_FALSE(proof.solution.has_value());
  ASSERT_FALSE(proof.truncated);

  RuleSet rules = trained_sokoban().rules;
  AgentOptions opt;
  // Whatever is still unknown about this room gets explored first.
  const EpisodeLog first = run_episode(wedged, rules, opt);
  EXPECT_EQ(first.outcome, EpisodeOutcome::kGaveUp);
  const std::size_t before = rules.size();
  const EpisodeLog second = run_episode(wedged, rules, opt);
  EXPECT_EQ(second.outcome, EpisodeOutcome::kGaveUp);
  EXPECT_EQ(second.env_steps, 0);
  EXPECT_EQ(second.rules_learned, 0u);
  EXPECT_EQ(rules.size(), before);
}

TEST(Episode, FrozenRulesStopAtUnknownTransitions) {
  RuleSet rules(GameKind::kSokoban);
  AgentOptions opt;
  opt.learn = false;
  // Without a known agent sprite nothing can be planned.
  EXPECT_THROW(run_episode(make_level(kSokoban7, 1), rules, opt), Error);

  RuleSet partial = trained_sokoban().rules;
  opt.learn = false;
  const Level l = make_level({GameKind::kSokoban, 9, 4, {0}, {}}, 3);
  const EpisodeLog log = run_episode(l, partial, opt);
  EXPECT_NE(log.outcome, EpisodeOutcome::kStepCap);
  EXPECT_EQ(log.rules_learned, 0u);
  EXPECT_EQ(partial.size(), trained_sokoban().rules.size());
}

TEST(Demonstration, ImportEqualsLiveLearning) {
  const TrajectoryLog demo = record_demonstration(kSokoban7, 2);
  ASSERT_FALSE(demo.records.empty());
  EXPECT_LE(demo.records.size(), 120u);
  RuleSet from_memory(GameKind::kSokoban);
  train_from_demonstrations(demo, from_memory);
  RuleSet from_file(GameKind::kSokoban);
  train_from_demonstrations(trajectory_from_string(trajectory_to_string(demo)), from_file);
  EXPECT_EQ(rules_to_string(from_memory), rules_to_string(from_file));

  // Replaying the same records by hand gives the same rules.
  RuleSet manual(GameKind::kSokoban);
  manual.vocabulary() = demo.vocab;
  manual.agent_group() = demo.agents;
  for (const auto& r : demo.records) learn_rule(manual, r.before, r.after, r.action, r.reward, r.agent);
  EXPECT_EQ(rules_to_string(manual), rules_to_string(from_memory));
}

TEST(Demonstration, RejectsForeignVocabulary) {
  const TrajectoryLog demo = record_demonstration(kSokoban7, 2);
  RuleSet other = trained_sokoban().rules;
  TrajectoryLog tampered = demo;
  tampered.vocab = Vocabulary{};
  EXPECT_THROW(train_from_demonstrations(tampered, other), Error);
  RuleSet doorkey(GameKind::kDoorKey);
  EXPECT_THROW(train_from_demonstrations(demo, doorkey), FormatError);
}

TEST(Trajectory, RoundTripsAndRejectsGarbage) {
  const TrajectoryLog& log = trained_sokoban().log;
  const std::string text = trajectory_to_string(log);
  EXPECT_TRUE(trajectory_from_string(text) == log);
  EXPECT_THROW(trajectory_from_string("not a trajectory\n"), Error);
  EXPECT_EQ(decode_rle(encode_rle(log.records[3].after), log.height, log.width), log.records[3].after);
}

TEST(Symmetry, RotatedRulesCoverRotatedLevels) {
  TrainOptions opt;
  opt.agent.rotation_symmetry = true;
  TrainResult r = train_from_scratch(kDoorKey6, 0, opt);
  ASSERT_TRUE(r.run.converged_at.has_value());
  AgentOptions eval;
  eval.learn = false;
  for (std::uint64_t i = 0; i < 8; ++i) {
    const Level l = generate_doorkey(eval_level_seed(3, i), 6, static_cast<int>(i % 4));
    EXPECT_EQ(run_episode(l, r.rules, eval).outcome, EpisodeOutcome::kWin) << i;
  }
  RuleSet sokoban(GameKind::kSokoban);
  EXPECT_THROW(learn_transition(sokoban, ObjectGrid(1, 1), ObjectGrid(1, 1), 0, 0.0, {0, 0}, true), Error);
}

}  // namespace
}  // namespace vrr
