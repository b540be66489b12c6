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

#include <set>
#include <sstream>

#include "vrr/gridworld.hpp"
#include "vrr/image.hpp"
#include "vrr/solver.hpp"

namespace vrr {
namespace {

Level parse(const char* text) { return level_from_string(text); }

TEST(Rng, BoundedDrawIsStableAcrossRuns) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform(0, 9), b.uniform(0, 9));
  Rng c(42);
  for (int i = 0; i < 1000; ++i) {
    const int v = c.uniform(-3, 3);
    EXPECT_GE(v, -3);
    EXPECT_LE(v, 3);
  }
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

TEST(Sokoban, PushMovesBoxOntoTarget) {
  Level l = parse(
      "sokoban 0 5 3\n"
      "#####\n"
      "#@$.#\n"
      "#####\n");
  const StepOutcome out = step(l, sokoban_dir_action(Dir::kE));
  EXPECT_TRUE(out.won);
  EXPECT_TRUE(out.done);
  EXPECT_DOUBLE_EQ(out.reward, 1.0);
  EXPECT_EQ(out.next_state.cells[(Pos{1, 3})], Tile::kBoxOnTarget);
  EXPECT_EQ(out.next_state.agent, (Pos{1, 2}));
}

TEST(Sokoban, BlockedPushLeavesStateAlone) {
  Level l = parse(
      "sokoban 0 6 3\n"
      "######\n"
      "#@$$.#\n"
      "######\n");
  const StepOutcome out = step(l, sokoban_dir_action(Dir::kE));
  EXPECT_EQ(out.next_state.cells, l.cells);
  EXPECT_DOUBLE_EQ(out.reward, 0.0);
  EXPECT_FALSE(out.done);
  EXPECT_EQ(out.steps, 1);
}

TEST(Sokoban, StepCapEndsEpisode) {
  Level l = parse(
      "sokoban 0 5 3\n"
      "#####\n"
      "#@.$#\n"
      "#####\n");
  const int cap = l.step_cap();
  EXPECT_EQ(cap, 150);
  for (int i = 0; i < cap - 1; ++i) l = step(l, sokoban_dir_action(Dir::kW)).next_state;
  EXPECT_FALSE(l.done);
  l = step(l, sokoban_dir_action(Dir::kW)).next_state;
  EXPECT_TRUE(l.done);
  EXPECT_THROW(step(l, 0), Error);
}

TEST(Sokoban, ShapedRewardCountsBoxesOnTargets) {
  Level l = parse(
      "sokoban 0 7 3\n"
      "#######\n"
      "#@$..$#\n"
      "#######\n");
  RewardScheme shaped;
  shaped.shaped = true;
  const StepOutcome out = step(l, sokoban_dir_action(Dir::kE), shaped);
  EXPECT_NEAR(out.reward, -0.01 + 0.1, 1e-12);
  // Target to target: no change in the count.
  const StepOutcome out2 = step(out.next_state, sokoban_dir_action(Dir::kE), shaped);
  EXPECT_NEAR(out2.reward, -0.01, 1e-12);
  const StepOutcome sparse = step(l, sokoban_dir_action(Dir::kE));
  EXPECT_DOUBLE_EQ(sparse.reward, 0.0);
}

TEST(Sokoban, GeneratedLevelsAreSolvableAndDeterministic) {
  for (int size : {5, 7, 9}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Level a = generate_sokoban(seed, size, size >= 7 ? 2 : 1);
      const Level b = generate_sokoban(seed, size, size >= 7 ? 2 : 1);
      EXPECT_EQ(level_to_string(a), level_to_string(b));
      EXPECT_EQ(a.cells.width(), size);
      const SolveResult solved = solve_level(a);
      ASSERT_TRUE(solved.solution.has_value()) << level_to_string(a);
      Level l = a;
      for (ActionId act : *solved.solution) l = step(l, act).next_state;
      EXPECT_TRUE(l.done);
    }
  }
  EXPECT_NE(level_to_string(generate_sokoban(1, 7, 1)), level_to_string(generate_sokoban(2, 7, 1)));
}

TEST(Sokoban, RejectsImpossibleParameters) {
  EXPECT_THROW(generate_sokoban(0, 4, 1), Error);
  EXPECT_THROW(generate_sokoban(0, 7, 0), Error);
  EXPECT_THROW(generate_sokoban(0, 7, 100), Error);
}

TEST(DoorKey, ToggleNeedsKeyThenForwardReachesGoal) {
  Level l = parse(
      "doorkey 0 6 3\n"
      "######\n"
      "#>KLG#\n"
      "######\n");
  const ActionId forward = 2, pickup = 3, toggle = 4;
  StepOutcome out = step(l, toggle);
  EXPECT_EQ(out.next_state.cells, l.cells);
  out = step(out.next_state, pickup);
  EXPECT_TRUE(out.next_state.carrying);
  EXPECT_EQ(out.next_state.cells[(Pos{1, 2})], Tile::kFloor);
  out = step(out.next_state, forward);
  out = step(out.next_state, toggle);
  EXPECT_EQ(out.next_state.cells[(Pos{1, 3})], Tile::kFloor);
  out = step(out.next_state, forward);
  EXPECT_FALSE(out.done);
  out = step(out.next_state, forward);
  EXPECT_TRUE(out.won);
  EXPECT_DOUBLE_EQ(out.reward, 1.0);
}

TEST(DoorKey, TurningChangesFacingOnly) {
  Level l = parse(
      "doorkey 0 5 3\n"
      "#####\n"
      "#>KG#\n"
      "#####\n");
  const StepOutcome out = step(l, 1);
  EXPECT_EQ(out.next_state.facing, Dir::kS);
  EXPECT_EQ(out.next_state.agent, l.agent);
  EXPECT_EQ(out.next_state.cells[l.agent], Tile::kAgentS);
}

TEST(DoorKey, GeneratedLevelsSolvableAtEveryRotation) {
  for (int size : {6, 8, 16}) {
    for (int rot = 0; rot < 4; ++rot) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Level l = generate_doorkey(seed, size, rot);
        EXPECT_EQ(l.rotation, rot);
        EXPECT_TRUE(solve_level(l).solution.has_value()) << level_to_string(l);
      }
    }
  }
}

// Rotating a level and its actions commutes with stepping.
TEST(Rotation, StepIsEquivariant) {
  for (GameKind kind : {GameKind::kSokoban, GameKind::kDoorKey}) {
    const Level base = kind == GameKind::kSokoban ? generate_sokoban(3, 7, 2) : generate_doorkey(3, 7, 0);
    for (int q = 1; q < 4; ++q) {
      Level a = base;
      Level b = rotate_level(base, q);
      Rng rng(q);
      for (int i = 0; i < 60 && !a.done; ++i) {
        const ActionId act = rng.uniform(0, action_count(kind) - 1);
        a = step(a, act).next_state;
        b = step(b, rotate_action(kind, act, q)).next_state;
        ASSERT_EQ(rotate_level(a, q).cells, b.cells);
      }
    }
  }
}

TEST(LevelText, RoundTrips) {
  const Level l = generate_doorkey(11, 8, 1);
  const Level back = level_from_string(level_to_string(l));
  EXPECT_EQ(back.cells, l.cells);
  EXPECT_EQ(back.agent, l.agent);
  EXPECT_EQ(back.facing, l.facing);
  EXPECT_THROW(level_from_string("sokoban 0 3 1\n#?#\n"), Error);
}

TEST(Image, PpmRoundTripAndDistinctSprites) {
  const Level l = generate_sokoban(5, 7, 2);
  const PixelImage img = render(l, 16);
  EXPECT_EQ(img.width, 7 * 16);
  std::stringstream buf;
  write_ppm(buf, img);
  const PixelImage back = read_ppm(buf);
  EXPECT_EQ(back.rgb, img.rgb);
}

// A quarter-turned picture of a level is the picture of the turned level.
TEST(Image, SpritesAreRotationConsistent) {
  for (GameKind kind : {GameKind::kSokoban, GameKind::kDoorKey}) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      Level l = kind == GameKind::kSokoban ? generate_sokoban(seed, 7, 2) : generate_doorkey(seed, 6, 0);
      if (kind == GameKind::kDoorKey && seed % 2 == 1) l = step(step(l, 3).next_state, 0).next_state;
      for (int q = 0; q < 4; ++q) {
        for (int px : {8, 16}) EXPECT_EQ(render(rotate_level(l, q), px), rotate_image(render(l, px), q));
      }
    }
  }
}

TEST(Image, EveryTileHasItsOwnSprite) {
  std::set<std::vector<std::uint8_t>> seen;
  for (int t = 0; t < kTileCount; ++t) {
    Grid<Tile> g(1, 1);
    g[Pos{0, 0}] = static_cast<Tile>(t);
    EXPECT_TRUE(seen.insert(render(g, 16).rgb).second) << t;
  }
}

TEST(Solver, ReportsUnsolvable) {
  Level l = parse(
      "sokoban 0 5 4\n"
      "#####\n"
      "#$@.#\n"
      "#...#\n"
      "#####\n");
  const SolveResult r = solve_level(l);
  EXPECT_FALSE(r.solution.has_value());
  EXPECT_FALSE(r.truncated);
}

}  // namespace
}  // namespace vrr
