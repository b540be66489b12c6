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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// fails. Ground truth always comes from the simulator or the exhaustive
// solver, never from the learned model.

#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "vrr/agent.hpp"
#include "vrr/harness.hpp"
#include "vrr/solver.hpp"

namespace fs = std::filesystem;
using namespace vrr;

namespace {

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail, double seconds) {
  if (!pass) ++failures;
  std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << " [" << std::fixed << std::setprecision(1)
            << seconds << "s]" << std::endl;
}

template <typename Fn>
void criterion(const std::string& name, Fn fn) {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = false;
  std::string detail;
  try {
    std::tie(pass, detail) = fn();
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("exception: ") + e.what();
  }
  report(name, pass, detail, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(3) << v;
  return s.str();
}

const GameConfig kSokoban7{GameKind::kSokoban, 7, 1, {0}, {}};
const GameConfig kDoorKey6{GameKind::kDoorKey, 6, 1, {0}, {}};
constexpr std::uint64_t kEvalSeed = 1000;
constexpr int kEpisodes = 100;

const TrainResult& trained(GameKind game) {
  static const TrainResult sokoban = train_from_scratch(kSokoban7, 0);
  static const TrainResult doorkey = train_from_scratch(kDoorKey6, 0);
  return game == GameKind::kSokoban ? sokoban : doorkey;
}

AgentOptions frozen() {
  AgentOptions opt;
  opt.learn = false;
  return opt;
}

double eval_return(const RuleSet& rules, const GameConfig& game, bool require_solvable, InvariantLog& inv) {
  return evaluate(rules, game, kEvalSeed, kEpisodes, frozen(), require_solvable, inv).mean_return();
}

std::pair<bool, std::string> world_model_exactness() {
  const TrainResult& t = trained(GameKind::kSokoban);
  if (!t.run.converged_at) return {false, "training did not converge"};
  RuleSet rules = t.rules;
  const AgentOptions opt = frozen();
  int pairs = 0, known = 0, wrong = 0;
  for (std::uint64_t level_i = 0; level_i < 50; ++level_i) {
    const Level start = make_level(kSokoban7, eval_level_seed(kEvalSeed, level_i));
    Level l = start;
    Rng rng(derive_seed(level_i, 0xE8AC7));
    for (int k = 0; k < 20; ++k, ++pairs) {
      if (l.done) l = start;
      const Perceived s = perceive(l, rules, opt);
      const ActionId a = rng.uniform(0, action_count(l.kind) - 1);
      const StepOutcome truth = step(l, a);
      const Perceived s2 = perceive(truth.next_state, rules, opt, &s.grid);
      const Prediction p = apply(rules, s.grid, a, s.agent);
      if (p.known()) {
        ++known;
        if (*p.next_state != s2.grid || p.reward != truth.reward) ++wrong;
      }
      l = truth.next_state;
    }
  }
  return {pairs == 1000 && known > 0 && wrong == 0,
          std::to_string(pairs) + " pairs over 50 levels, " + std::to_string(known) + " known, " +
              std::to_string(wrong) + " mismatches (need 0)"};
}

std::pair<bool, std::string> sample_efficiency() {
  std::string detail;
  bool pass = true;
  for (auto [cfg, limit] : {std::pair{kSokoban7, std::size_t{5000}}, std::pair{kDoorKey6, std::size_t{10000}}}) {
    detail += std::string(game_name(cfg.game)) + " steps to converge:";
    for (std::uint64_t seed : {0, 1, 2}) {
      const TrainResult r = train_from_scratch(cfg, seed);
      const bool ok = r.run.converged_at && *r.run.converged_at <= limit;
      pass = pass && ok;
      detail += " " + (r.run.converged_at ? std::to_string(*r.run.converged_at) : std::string("none"));
    }
    detail += " (limit " + std::to_string(limit) + "); ";
  }
  return {pass, detail};
}

std::pair<bool, std::string> demonstrations() {
  InvariantLog inv;
  std::string detail;
  bool pass = true;
  for (const GameConfig& cfg : {kSokoban7, kDoorKey6}) {
    const TrajectoryLog demo = record_demonstration(cfg, 0);
    RuleSet rules(cfg.game);
    train_from_demonstrations(trajectory_from_string(trajectory_to_string(demo)), rules);
    const double ret = eval_return(rules, cfg, false, inv);
    const bool sokoban = cfg.game == GameKind::kSokoban;
    pass = pass && demo.records.size() <= 120 && (sokoban ? ret >= 0.9 : ret == 1.0);
    detail += std::string(game_name(cfg.game)) + " demo " + std::to_string(demo.records.size()) + " steps, return " +
              fmt(ret) + (sokoban ? " (need >= 0.9); " : " (need 1.0); ");
  }
  return {pass && inv.ok(), detail};
}

std::pair<bool, std::string> zero_shot_size() {
  InvariantLog inv;
  GameConfig sokoban13 = kSokoban7;
  sokoban13.size = 13;
  GameConfig doorkey32 = kDoorKey6;
  doorkey32.size = 32;
  const double s = eval_return(trained(GameKind::kSokoban).rules, sokoban13, true, inv);
  const double d = eval_return(trained(GameKind::kDoorKey).rules, doorkey32, false, inv);
  return {s >= 0.95 && d == 1.0 && inv.ok(),
          "sokoban 13x13 return " + fmt(s) + " (need >= 0.95), doorkey 32x32 return " + fmt(d) + " (need 1.0)"};
}

std::pair<bool, std::string> zero_shot_rotation() {
  InvariantLog inv;
  GameConfig rotated = kDoorKey6;
  rotated.rotations = {0, 1, 2, 3};
  TrainOptions sym;
  sym.agent.rotation_symmetry = true;
  const TrainResult r4 = train_from_scratch(kDoorKey6, 0, sym);
  const double with_sym = eval_return(r4.rules, rotated, false, inv);
  const double per_facing = eval_return(trained(GameKind::kDoorKey).rules, rotated, false, inv);
  return {with_sym == 1.0 && inv.ok(), "rotation-symmetric rules return " + fmt(with_sym) +
                                           " (need 1.0); per-facing rules return " + fmt(per_facing) +
                                           " (reported only)"};
}

std::pair<bool, std::string> box_sweep() {
  InvariantLog inv;
  std::vector<double> means;
  std::string detail = "returns by box count:";
  for (int boxes = 1; boxes <= 4; ++boxes) {
    GameConfig cfg = kSokoban7;
    cfg.boxes = boxes;
    means.push_back(eval_return(trained(GameKind::kSokoban).rules, cfg, true, inv));
    detail += " " + std::to_string(boxes) + "->" + fmt(means.back());
  }
  const bool monotone = std::is_sorted(means.rbegin(), means.rend());
  return {monotone && means.back() > 0.0 && inv.ok(),
          detail + (monotone ? " (non-increasing)" : " (NOT non-increasing)") + ", 4 boxes must be > 0"};
}

std::pair<bool, std::string> give_up() {
  const Level wedged = level_from_string(
      "sokoban 0 7 5\n"
      "#######\n"
      "#$----#\n"
      "#-----#\n"
      "#--@-.#\n"
      "#######\n");
  const SolveResult proof = solve_level(wedged);
  if (proof.solution || proof.truncated) return {false, "level is not provably unwinnable"};
  RuleSet rules = trained(GameKind::kSokoban).rules;
  AgentOptions opt;
  const EpisodeLog first = run_episode(wedged, rules, opt);
  const std::size_t rules_before = rules.size();
  const EpisodeLog again = run_episode(wedged, rules, opt);
  const bool pass = first.outcome == EpisodeOutcome::kGaveUp && again.outcome == EpisodeOutcome::kGaveUp &&
                    again.env_steps == 0 && again.rules_learned == 0 && rules.size() == rules_before;
  return {pass, "unwinnable by exhaustive search (" + std::to_string(proof.states) + " states); first visit " +
                    std::string(outcome_name(first.outcome)) + " after exploring " + std::to_string(first.env_steps) +
                    " steps / " + std::to_string(first.rules_learned) + " rules; from the wedge again: " +
                    std::string(outcome_name(again.outcome)) + " with " + std::to_string(again.env_steps) +
                    " steps, " + std::to_string(again.rules_learned) + " new rules"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs the command-line tool twice with identical flags and compares every
// output file except wall-clock timing.
std::pair<bool, std::string> determinism() {
  const fs::path root = fs::temp_directory_path() / ("vrr_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::string cli = VRR_CLI_PATH;
  std::size_t compared = 0;
  bool same = true;
  std::string first_diff;
  const std::vector<std::string> commands = {
      "train --game doorkey --size 6 --seed 3",
      "eval --game sokoban --size 9 --episodes 20 --rules {r}",
      "table2 --game sokoban --train-seeds 0,1 --episodes 10 --eval-sizes 9 --jobs 2",
  };
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = root / std::to_string(run);
    fs::create_directories(dir);
    const std::string rules = (dir / "sokoban.rules").string();
    if (std::system((cli + " train --game sokoban --seed 0 --rules " + rules + " >/dev/null 2>&1").c_str()) != 0) {
      return {false, "training the shared rule file failed"};
    }
    for (std::size_t i = 0; i < commands.size(); ++i) {
      std::string cmd = commands[i];
      if (auto at = cmd.find("{r}"); at != std::string::npos) cmd.replace(at, 3, rules);
      const fs::path out = dir / std::to_string(i);
      const std::string extra = i == 0 ? " --rules " + (out / "trained.rules").string() : std::string();
      if (std::system((cli + " " + cmd + extra + " --out " + out.string() + " >/dev/null 2>&1").c_str()) != 0) {
        return {false, "command failed: vrr " + cmd};
      }
    }
  }
  for (const auto& entry : fs::recursive_directory_iterator(root / "0")) {
    if (!entry.is_regular_file() || entry.path().string().ends_with(".timing.json")) continue;
    const fs::path twin = root / "1" / fs::relative(entry.path(), root / "0");
    ++compared;
    if (slurp(entry.path()) != slurp(twin)) {
      same = false;
      if (first_diff.empty()) first_diff = fs::relative(entry.path(), root / "0").string();
    }
  }
  fs::remove_all(root);
  return {same && compared > commands.size(), std::to_string(compared) + " report/rule/curve files compared across two runs" +
                                     (same ? ", all byte-identical" : ", first difference in " + first_diff)};
}

// The agent sprites are exactly the tiles the simulator draws as the agent.
std::pair<bool, std::string> perception() {
  int good = 0, trials = 0;
  std::string detail;
  for (GameKind game : {GameKind::kSokoban, GameKind::kDoorKey}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed, ++trials) {
      const int px = seed % 2 == 0 ? 16 : 8;
      const int size = 6 + static_cast<int>(seed % 4);
      TrainOptions opt;
      opt.max_steps = 50;  // warm-up only
      opt.agent.sprite_px = px;
      const TrainResult r = train_from_scratch({game, size, 1, {0}, {}}, seed, opt);
      std::set<std::string> agent_digests, other_digests;
      for (int t = 0; t < kTileCount; ++t) {
        Grid<Tile> g(1, 1);
        g[(Pos{0, 0})] = static_cast<Tile>(t);
        Vocabulary v;
        tokenize(render(g, px), px, v);
        (is_agent_tile(static_cast<Tile>(t)) ? agent_digests : other_digests).insert(v.entry(0).digest);
      }
      bool ok = r.run.cell_size == px && !r.run.identity.group.empty();
      for (ObjectId id : r.run.identity.group) ok = ok && agent_digests.contains(r.rules.vocabulary().entry(id).digest);
      ok = ok && agent_digests.contains(r.rules.vocabulary().entry(r.run.identity.agent_id).digest);
      if (ok) ++good;
      else detail += " miss(" + std::string(game_name(game)) + " seed " + std::to_string(seed) + ")";
    }
  }
  return {good == trials && trials == 20,
          std::to_string(good) + "/" + std::to_string(trials) + " trials recovered cell size and agent sprite" + detail};
}

}  // namespace

int main() {
  criterion("world_model_exactness", world_model_exactness);
  criterion("sample_efficiency", sample_efficiency);
  criterion("demonstration_learning", demonstrations);
  criterion("zero_shot_board_size", zero_shot_size);
  criterion("zero_shot_rotation", zero_shot_rotation);
  criterion("box_count_degradation", box_sweep);
  criterion("give_up_correctness", give_up);
  criterion("determinism", determinism);
  criterion("perception_recovery", perception);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
