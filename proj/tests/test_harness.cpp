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

#include <sstream>

#include "vrr/harness.hpp"

namespace vrr {
namespace {

TEST(Config, ReadsKeyValueLines) {
  ExperimentConfig cfg;
  std::istringstream in(
      "# doorkey sweep\n"
      "game = doorkey\n"
      "size=8   # board\n"
      "rotations = 0, 90,270\n"
      "train_seeds = 4,5\n"
      "learn = on\n"
      "symmetry = rot4\n"
      "\n");
  read_config(in, cfg);
  EXPECT_EQ(cfg.game, GameKind::kDoorKey);
  EXPECT_EQ(cfg.size, 8);
  EXPECT_EQ(cfg.rotations, (std::vector<int>{0, 1, 3}));
  EXPECT_EQ(cfg.train_seeds, (std::vector<std::uint64_t>{4, 5}));
  EXPECT_TRUE(cfg.learn);
  EXPECT_TRUE(cfg.rotation_symmetry);
  EXPECT_NO_THROW(validate(cfg));
}

TEST(Config, RejectsBadValues) {
  ExperimentConfig cfg;
  EXPECT_THROW(set_config_value(cfg, "colour", "red"), ConfigError);
  EXPECT_THROW(set_config_value(cfg, "size", "seven"), ConfigError);
  EXPECT_THROW(set_config_value(cfg, "rotations", "45"), ConfigError);
  EXPECT_THROW(set_config_value(cfg, "symmetry", "mirror"), ConfigError);
  EXPECT_THROW(set_config_value(cfg, "learn", "maybe"), ConfigError);
  std::istringstream no_eq("size 7\n");
  EXPECT_THROW(read_config(no_eq, cfg), ConfigError);
}

TEST(Config, ValidationCatchesInconsistentSettings) {
  auto invalid = [](auto edit) {
    ExperimentConfig cfg;
    edit(cfg);
    EXPECT_THROW(validate(cfg), ConfigError);
  };
  invalid([](ExperimentConfig& c) { c.size = 3; });
  invalid([](ExperimentConfig& c) { c.boxes = 20; });
  invalid([](ExperimentConfig& c) { c.rotations = {1}; });  // sokoban cannot rotate
  invalid([](ExperimentConfig& c) { c.train_seeds = {1000}; });  // collides with eval seed
  invalid([](ExperimentConfig& c) { c.train_seeds = {1, 1}; });
  invalid([](ExperimentConfig& c) { c.rotation_symmetry = true; });
  invalid([](ExperimentConfig& c) { c.episodes = 0; });
  EXPECT_NO_THROW(validate(ExperimentConfig{}));
}

TEST(Invariants, CollectDistinctFailures) {
  InvariantLog a, b;
  a.check("x", true);
  a.check("y", false);
  b.check("y", false);
  b.check("z", false);
  a.merge(b);
  EXPECT_FALSE(a.ok());
  EXPECT_EQ(a.failures(), (std::vector<std::string>{"y", "z"}));
  EXPECT_EQ(a.checked(), 4u);
  InvariantLog d;
  check_disjoint({1, 2}, {3, 4}, d);
  EXPECT_TRUE(d.ok());
  check_disjoint({1, 2}, {2}, d);
  EXPECT_FALSE(d.ok());
}

TEST(Stats, PopulationStandardDeviation) {
  const Stat s = stat_of({1.0, 3.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.std, 1.0);
  EXPECT_DOUBLE_EQ(stat_of({}).mean, 0.0);
}

TEST(Parallel, ResultsKeepIndexOrder) {
  const auto out = parallel_map(20, 4, [](std::size_t i) { return static_cast<int>(i * i); });
  ASSERT_EQ(out.size(), 20u);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], static_cast<int>(i * i));
}

// A report reruns byte for byte, whatever the thread count.
TEST(Report, DeterministicAcrossRunsAndJobs) {
  ExperimentConfig cfg;
  cfg.episodes = 10;
  cfg.train_seeds = {0, 1};
  cfg.eval_sizes = {9};
  const std::string a = run_table2(cfg).text();
  cfg.jobs = 2;
  const std::string b = run_table2(cfg).text();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.find("seconds"), std::string::npos);
}

}  // namespace
}  // namespace vrr
