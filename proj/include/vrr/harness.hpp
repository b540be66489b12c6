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

// Experiment runner: configuration, training/evaluation drivers, reports.
//
// Reports contain only quantities derived from the configuration and seeds,
// so rerunning a command reproduces them byte for byte. Wall-clock time goes
// to a separate timing file.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <future>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vrr/agent.hpp"
#include "vrr/rules.hpp"
#include "vrr/solver.hpp"

namespace vrr {

using Json = nlohmann::ordered_json;

class ConfigError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
  GameKind game = GameKind::kSokoban;
  int size = 7;
  int boxes = 1;
  std::vector<int> rotations{0};  // quarter turns
  std::vector<std::uint64_t> train_seeds{0, 1, 2};
  std::uint64_t eval_seed = 1000;
  int episodes = 100;
  bool learn = false;
  std::size_t budget = 500'000;
  std::size_t max_steps = 20'000;
  bool rotation_symmetry = false;
  bool shaped_reward = false;
  int sprite_px = 16;
  std::size_t demo_steps = 120;
  int jobs = 1;
  std::vector<int> eval_sizes;      // table2; empty means game default
  std::vector<int> eval_boxes;      // boxsweep; empty means 1..4
  std::string rules_path;
  std::string demo_path;
  std::string out_dir;

  [[nodiscard]] GameConfig game_config() const {
    GameConfig g;
    g.game = game;
    g.size = size;
    g.boxes = boxes;
    g.rotations = rotations;
    g.reward.shaped = shaped_reward;
    return g;
  }

  [[nodiscard]] AgentOptions agent_options() const {
    AgentOptions a;
    a.learn = learn;
    a.budget = budget;
    a.sprite_px = sprite_px;
    a.cell_size = sprite_px;
    a.rotation_symmetry = rotation_symmetry;
    return a;
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": not a number: '" + value + "'");
  return out;
}

inline bool parse_switch(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw ConfigError(key + ": expected on/off, got '" + value + "'");
}

}  // namespace detail

/// Applies one `key=value` setting. Rotations are given in degrees.
inline void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_number;
  if (key == "game") {
    try {
      cfg.game = parse_game(value);
    } catch (const Error&) {
      throw ConfigError("game: unknown game '" + value + "'");
    }
  } else if (key == "size") {
    cfg.size = parse_number<int>(key, value);
  } else if (key == "boxes") {
    cfg.boxes = parse_number<int>(key, value);
  } else if (key == "rotations") {
    cfg.rotations.clear();
    for (const auto& item : detail::split_list(value)) {
      const int deg = parse_number<int>(key, item);
      if (deg % 90 != 0 || deg < 0 || deg >= 360) throw ConfigError("rotations: must be 0, 90, 180 or 270");
      cfg.rotations.push_back(deg / 90);
    }
  } else if (key == "seed") {
    cfg.train_seeds = {parse_number<std::uint64_t>(key, value)};
  } else if (key == "train_seeds") {
    cfg.train_seeds.clear();
    for (const auto& item : detail::split_list(value)) cfg.train_seeds.push_back(parse_number<std::uint64_t>(key, item));
  } else if (key == "eval_seed") {
    cfg.eval_seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "episodes") {
    cfg.episodes = parse_number<int>(key, value);
  } else if (key == "learn") {
    cfg.learn = detail::parse_switch(key, value);
  } else if (key == "budget") {
    cfg.budget = parse_number<std::size_t>(key, value);
  } else if (key == "max_steps") {
    cfg.max_steps = parse_number<std::size_t>(key, value);
  } else if (key == "symmetry") {
    if (value != "none" && value != "rot4") throw ConfigError("symmetry: expected none or rot4");
    cfg.rotation_symmetry = value == "rot4";
  } else if (key == "reward") {
    if (value != "sparse" && value != "shaped") throw ConfigError("reward: expected sparse or shaped");
    cfg.shaped_reward = value == "shaped";
  } else if (key == "sprite_px") {
    cfg.sprite_px = parse_number<int>(key, value);
  } else if (key == "demo_steps") {
    cfg.demo_steps = parse_number<std::size_t>(key, value);
  } else if (key == "jobs") {
    cfg.jobs = parse_number<int>(key, value);
  } else if (key == "eval_sizes") {
    cfg.eval_sizes.clear();
    for (const auto& item : detail::split_list(value)) cfg.eval_sizes.push_back(parse_number<int>(key, item));
  } else if (key == "eval_boxes") {
    cfg.eval_boxes.clear();
    for (const auto& item : detail::split_list(value)) cfg.eval_boxes.push_back(parse_number<int>(key, item));
  } else if (key == "rules") {
    cfg.rules_path = value;
  } else if (key == "demo") {
    cfg.demo_path = value;
  } else if (key == "out") {
    cfg.out_dir = value;
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

/// `key = value` lines; `#` starts a comment.
inline void read_config(std::istream& in, ExperimentConfig& cfg) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    set_config_value(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
}

inline void load_config_file(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  read_config(in, cfg);
}

inline int max_boxes(int size) { return (size - 2) * (size - 2) / 4; }

/// Checks every field before anything is generated.
inline void validate(const ExperimentConfig& cfg) {
  if (cfg.size < 5 || cfg.size > 64) throw ConfigError("size must be in [5, 64]");
  if (cfg.game == GameKind::kSokoban && (cfg.boxes < 1 || cfg.boxes > max_boxes(cfg.size))) {
    throw ConfigError("boxes must be in [1, " + std::to_string(max_boxes(cfg.size)) + "] for this size");
  }
  if (cfg.rotations.empty()) throw ConfigError("rotations must not be empty");
  for (int q : cfg.rotations) {
    if (q < 0 || q > 3) throw ConfigError("rotations must be 0, 90, 180 or 270");
  }
  if (cfg.game == GameKind::kSokoban && cfg.rotations != std::vector<int>{0}) {
    throw ConfigError("rotations apply to doorkey only");
  }
  if (cfg.train_seeds.empty()) throw ConfigError("at least one train seed is needed");
  if (std::set<std::uint64_t>(cfg.train_seeds.begin(), cfg.train_seeds.end()).size() != cfg.train_seeds.size()) {
    throw ConfigError("train seeds must be distinct");
  }
  for (std::uint64_t s : cfg.train_seeds) {
    if (s == cfg.eval_seed) throw ConfigError("train and eval seeds must be disjoint");
  }
  if (cfg.episodes < 1) throw ConfigError("episodes must be >= 1");
  if (cfg.budget < 1) throw ConfigError("budget must be >= 1");
  if (cfg.max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (cfg.sprite_px < 4) throw ConfigError("sprite_px must be >= 4");
  if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (cfg.rotation_symmetry && cfg.game != GameKind::kDoorKey) throw ConfigError("symmetry=rot4 needs doorkey");
  for (int s : cfg.eval_sizes) {
    if (s < 5 || s > 64) throw ConfigError("eval_sizes must be in [5, 64]");
  }
  for (int b : cfg.eval_boxes) {
    if (b < 1 || b > max_boxes(cfg.size)) throw ConfigError("eval_boxes out of range for this size");
  }
}

inline Json config_json(const ExperimentConfig& cfg) {
  Json j;
  j["game"] = game_name(cfg.game);
  j["size"] = cfg.size;
  if (cfg.game == GameKind::kSokoban) j["boxes"] = cfg.boxes;
  Json rot = Json::array();
  for (int q : cfg.rotations) rot.push_back(q * 90);
  j["rotations"] = rot;
  j["train_seeds"] = cfg.train_seeds;
  j["eval_seed"] = cfg.eval_seed;
  j["episodes"] = cfg.episodes;
  j["learn"] = cfg.learn;
  j["budget"] = cfg.budget;
  j["max_steps"] = cfg.max_steps;
  j["symmetry"] = cfg.rotation_symmetry ? "rot4" : "none";
  j["reward"] = cfg.shaped_reward ? "shaped" : "sparse";
  j["sprite_px"] = cfg.sprite_px;
  return j;
}

// ---------------------------------------------------------------------------
// Invariant bookkeeping

class InvariantLog {
 public:
  void check(const std::string& name, bool ok) {
    ++checked_;
    if (!ok && failed_.insert(name).second) order_.push_back(name);
  }

  void merge(const InvariantLog& other) {
    checked_ += other.checked_;
    for (const auto& n : other.order_) {
      if (failed_.insert(n).second) order_.push_back(n);
    }
  }

  [[nodiscard]] bool ok() const noexcept { return order_.empty(); }
  [[nodiscard]] std::size_t checked() const noexcept { return checked_; }
  [[nodiscard]] const std::vector<std::string>& failures() const noexcept { return order_; }

  [[nodiscard]] Json to_json() const {
    Json j;
    j["checked"] = checked_;
    j["failed"] = order_;
    j["all_passed"] = ok();
    return j;
  }

 private:
  std::size_t checked_ = 0;
  std::set<std::string> failed_;
  std::vector<std::string> order_;
};

inline void check_episode(const EpisodeLog& ep, InvariantLog& inv) {
  inv.check("episode env steps equal record count", ep.env_steps == ep.records.size());
  if (ep.outcome == EpisodeOutcome::kWin) {
    inv.check("won episode ends on a rewarded terminal step",
              !ep.records.empty() && ep.records.back().done && ep.records.back().reward > 0.0);
  }
  inv.check("rule count never decreases", std::is_sorted(ep.rule_counts.begin(), ep.rule_counts.end()));
}

// ---------------------------------------------------------------------------
// Statistics

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

inline Stat stat_of(const std::vector<double>& v) {
  Stat s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(v.size()));
  return s;
}

inline Json stat_json(const std::vector<double>& v) {
  const Stat s = stat_of(v);
  return Json{{"mean", s.mean}, {"std", s.std}};
}

// ---------------------------------------------------------------------------
// Drivers

struct EvalSummary {
  std::vector<double> returns;
  std::vector<double> steps;
  std::map<EpisodeOutcome, int> outcomes;
  std::size_t nodes_expanded = 0;
  std::size_t skipped_unsolvable = 0;
  std::vector<std::uint64_t> level_seeds;

  [[nodiscard]] double mean_return() const { return stat_of(returns).mean; }
  [[nodiscard]] double mean_steps() const { return stat_of(steps).mean; }
};

inline Json eval_json(const EvalSummary& e) {
  Json j;
  j["episodes"] = e.returns.size();
  j["return"] = stat_json(e.returns);
  j["steps_per_episode"] = stat_json(e.steps);
  Json oc;
  for (EpisodeOutcome o : {EpisodeOutcome::kWin, EpisodeOutcome::kGaveUp, EpisodeOutcome::kStepCap,
                           EpisodeOutcome::kNeedsLearning}) {
    auto it = e.outcomes.find(o);
    oc[std::string(outcome_name(o))] = it == e.outcomes.end() ? 0 : it->second;
  }
  j["outcomes"] = oc;
  j["skipped_unsolvable"] = e.skipped_unsolvable;
  j["nodes_expanded"] = e.nodes_expanded;
  return j;
}

/// Sprite size a rule set was learned at (its tiles' width).
inline int rules_cell_size(const RuleSet& rules, int fallback) {
  return rules.vocabulary().empty() ? fallback : rules.vocabulary().entry(0).width;
}

/// Plays `episodes` fresh levels with a private copy of `rules`. With
/// `require_solvable`, levels the exact solver cannot finish are skipped.
inline EvalSummary evaluate(const RuleSet& trained, const GameConfig& game, std::uint64_t eval_seed, int episodes,
                            AgentOptions opt, bool require_solvable, InvariantLog& inv,
                            std::size_t solver_states = 2'000'000) {
  EvalSummary out;
  RuleSet rules = trained;
  opt.cell_size = rules_cell_size(rules, opt.sprite_px);
  const std::size_t before = rules.size();
  for (std::uint64_t i = 0; static_cast<int>(out.returns.size()) < episodes; ++i) {
    if (i > static_cast<std::uint64_t>(episodes) * 20) throw Error("evaluate: too many unsolvable levels");
    const std::uint64_t seed = eval_level_seed(eval_seed, i);
    const Level level = make_level(game, seed);
    if (require_solvable) {
      const SolveResult solved = solve_level(level, solver_states);
      if (!solved.solution) {
        ++out.skipped_unsolvable;
        continue;
      }
    }
    out.level_seeds.push_back(seed);
    const EpisodeLog ep = run_episode(level, rules, opt, static_cast<int>(out.returns.size()), game.reward);
    check_episode(ep, inv);
    out.returns.push_back(ep.total_reward);
    out.steps.push_back(static_cast<double>(ep.env_steps));
    ++out.outcomes[ep.outcome];
    out.nodes_expanded += ep.nodes_expanded;
  }
  if (!opt.learn) inv.check("evaluation without learning adds no rules", rules.size() == before);
  return out;
}

inline Json train_json(std::uint64_t seed, const TrainResult& r) {
  Json j;
  j["seed"] = seed;
  j["total_steps"] = r.run.total_steps;
  j["warmup_steps"] = r.run.warmup_steps;
  j["converged"] = r.run.converged_at.has_value();
  j["converged_at"] = r.run.converged_at ? Json(*r.run.converged_at) : Json(nullptr);
  j["episodes"] = r.run.episode_returns.size();
  j["rules"] = r.rules.size();
  j["active_rules"] = r.rules.active_count();
  j["cell_size"] = r.run.cell_size;
  j["agent_sprites"] = r.run.identity.group.size();
  j["vocab_hash"] = r.rules.vocabulary().hash();
  j["nodes_expanded"] = r.run.nodes_expanded;
  return j;
}

inline void check_training(const TrainResult& r, InvariantLog& inv) {
  inv.check("rule curve is non-decreasing", std::is_sorted(r.run.rule_curve.begin(), r.run.rule_curve.end()));
  inv.check("rule curve has one entry per step", r.run.rule_curve.size() == r.run.total_steps);
  inv.check("training log has one record per step", r.log.records.size() == r.run.total_steps);
}

inline void check_disjoint(const std::vector<std::uint64_t>& train, const std::vector<std::uint64_t>& eval,
                           InvariantLog& inv) {
  const std::set<std::uint64_t> t(train.begin(), train.end());
  inv.check("train and eval levels are disjoint",
            std::none_of(eval.begin(), eval.end(), [&](std::uint64_t s) { return t.contains(s); }));
}

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads; results come back
/// in index order whatever the scheduling.
template <typename Fn>
auto parallel_map(std::size_t n, int jobs, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<R> out;
  out.reserve(n);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
    return out;
  }
  std::vector<std::future<R>> pending;
  std::size_t next = 0;
  while (out.size() < n) {
    while (next < n && pending.size() - out.size() < static_cast<std::size_t>(jobs)) {
      pending.push_back(std::async(std::launch::async, fn, next++));
    }
    out.push_back(pending[out.size()].get());
  }
  return out;
}

struct TrainedSeed {
  std::uint64_t seed = 0;
  TrainResult result;
};

inline std::vector<TrainedSeed> train_all(const ExperimentConfig& cfg, const GameConfig& game) {
  TrainOptions opt;
  opt.max_steps = cfg.max_steps;
  opt.agent = cfg.agent_options();
  return parallel_map(cfg.train_seeds.size(), cfg.jobs, [&](std::size_t i) {
    return TrainedSeed{cfg.train_seeds[i], train_from_scratch(game, cfg.train_seeds[i], opt)};
  });
}

// ---------------------------------------------------------------------------
// Curves

/// `step,return,rule_count` per environment step. `return` is the mean of
/// the last (up to) 10 finished episodes at that step, 0 before the first.
inline void emit_curves(std::ostream& out, const TrainingRun& run, int window = 10) {
  out << "step,return,rule_count\n";
  std::size_t finished = 0;
  for (std::size_t step = 1; step <= run.rule_curve.size(); ++step) {
    while (finished < run.episode_end_step.size() && run.episode_end_step[finished] <= step) ++finished;
    double rolling = 0.0;
    if (finished > 0) {
      const std::size_t from = finished > static_cast<std::size_t>(window) ? finished - window : 0;
      for (std::size_t e = from; e < finished; ++e) rolling += run.episode_returns[e];
      rolling /= static_cast<double>(finished - from);
    }
    out << step << ',' << detail::format_double(rolling) << ',' << run.rule_curve[step - 1] << '\n';
  }
}

// ---------------------------------------------------------------------------
// Experiments

struct MetricsReport {
  Json json;
  InvariantLog invariants;
  /// Extra files to write next to the report: name -> contents.
  std::map<std::string, std::string> files;

  [[nodiscard]] std::string text() const {
    Json j = json;
    j["invariants"] = invariants.to_json();
    return j.dump(2) + "\n";
  }
};

inline Json quoted(Json rows) {
  return Json{{"note", "published reference values, quoted for comparison; not recomputed"}, {"rows", std::move(rows)}};
}

inline void add_curve_files(MetricsReport& report, const std::string& prefix, const std::vector<TrainedSeed>& runs) {
  for (const auto& t : runs) {
    std::ostringstream csv;
    emit_curves(csv, t.result.run);
    report.files[prefix + "_seed" + std::to_string(t.seed) + ".csv"] = csv.str();
  }
}

/// Steps to converge from scratch versus a short scripted demonstration,
/// and how each rule set does afterwards with learning off.
inline MetricsReport run_table1(const ExperimentConfig& cfg) {
  validate(cfg);
  MetricsReport report;
  const GameConfig game = cfg.game_config();
  AgentOptions eval_opt = cfg.agent_options();
  eval_opt.learn = false;
  report.json["experiment"] = "table1";
  report.json["config"] = config_json(cfg);

  const auto runs = train_all(cfg, game);
  Json scratch_seeds = Json::array();
  std::vector<double> steps, returns, avg_steps;
  for (const auto& t : runs) {
    check_training(t.result, report.invariants);
    EvalSummary e = evaluate(t.result.rules, game, cfg.eval_seed, cfg.episodes, eval_opt, false, report.invariants);
    check_disjoint(t.result.run.level_seeds, e.level_seeds, report.invariants);
    Json row = train_json(t.seed, t.result);
    row["eval"] = eval_json(e);
    scratch_seeds.push_back(row);
    steps.push_back(static_cast<double>(t.result.run.converged_at.value_or(t.result.run.total_steps)));
    returns.push_back(e.mean_return());
    avg_steps.push_back(e.mean_steps());
  }
  add_curve_files(report, "curve_scratch", runs);

  Json demo_seeds = Json::array();
  std::vector<double> d_steps, d_returns, d_avg;
  for (std::uint64_t seed : cfg.train_seeds) {
    const TrajectoryLog log = record_demonstration(game, seed, cfg.demo_steps, cfg.sprite_px);
    RuleSet rules(game.game);
    train_from_demonstrations(log, rules, cfg.rotation_symmetry);
    EvalSummary e = evaluate(rules, game, cfg.eval_seed, cfg.episodes, eval_opt, false, report.invariants);
    report.invariants.check("demonstration fits the step limit", log.records.size() <= cfg.demo_steps);
    Json row;
    row["seed"] = seed;
    row["demo_steps"] = log.records.size();
    row["demo_episodes"] = log.records.empty() ? 0 : log.records.back().episode + 1;
    row["rules"] = rules.size();
    row["eval"] = eval_json(e);
    demo_seeds.push_back(row);
    d_steps.push_back(static_cast<double>(log.records.size()));
    d_returns.push_back(e.mean_return());
    d_avg.push_back(e.mean_steps());
  }

  Json rows = Json::array();
  rows.push_back({{"data_source", "scratch"},
                  {"steps", stat_json(steps)},
                  {"avg_return", stat_json(returns)},
                  {"avg_steps", stat_json(avg_steps)},
                  {"per_seed", scratch_seeds}});
  rows.push_back({{"data_source", "scripted demonstration"},
                  {"steps", stat_json(d_steps)},
                  {"avg_return", stat_json(d_returns)},
                  {"avg_steps", stat_json(d_avg)},
                  {"per_seed", demo_seeds}});
  report.json["rows"] = rows;
  report.json["reference_values"] = quoted(
      cfg.game == GameKind::kSokoban
          ? Json::array({{{"data_source", "scratch"}, {"steps", 440}, {"avg_return", 1.0}, {"avg_steps", 4.528}},
                         {{"data_source", "human"}, {"steps", 81}, {"avg_return", 0.96}, {"avg_steps", 4.239}}})
          : Json::array({{{"data_source", "scratch"}, {"steps", 1058}, {"avg_return", 1.0}, {"avg_steps", 12.724}},
                         {{"data_source", "human"}, {"steps", 89}, {"avg_return", 1.0}, {"avg_steps", 10.249}}}));
  return report;
}

/// Train at the configured size, evaluate at others with learning off.
inline MetricsReport run_table2(const ExperimentConfig& cfg) {
  validate(cfg);
  MetricsReport report;
  const GameConfig game = cfg.game_config();
  AgentOptions eval_opt = cfg.agent_options();
  eval_opt.learn = false;
  report.json["experiment"] = "table2";
  report.json["config"] = config_json(cfg);
  std::vector<int> sizes = cfg.eval_sizes;
  if (sizes.empty()) sizes = {cfg.size, cfg.game == GameKind::kSokoban ? 13 : 32};

  const auto runs = train_all(cfg, game);
  Json rows = Json::array();
  for (int size : sizes) {
    GameConfig eval_game = game;
    eval_game.size = size;
    if (eval_game.game == GameKind::kSokoban && eval_game.boxes > max_boxes(size)) throw ConfigError("too many boxes");
    Json per_seed = Json::array();
    std::vector<double> returns;
    for (const auto& t : runs) {
      if (size == sizes.front()) check_training(t.result, report.invariants);
      EvalSummary e = evaluate(t.result.rules, eval_game, cfg.eval_seed, cfg.episodes, eval_opt,
                               eval_game.game == GameKind::kSokoban, report.invariants);
      check_disjoint(t.result.run.level_seeds, e.level_seeds, report.invariants);
      Json row = eval_json(e);
      row["seed"] = t.seed;
      per_seed.push_back(row);
      returns.push_back(e.mean_return());
    }
    rows.push_back({{"size", size}, {"avg_return", stat_json(returns)}, {"per_seed", per_seed}});
  }
  report.json["train"] = Json::array();
  for (const auto& t : runs) report.json["train"].push_back(train_json(t.seed, t.result));
  report.json["rows"] = rows;
  report.json["reference_values"] = quoted(
      cfg.game == GameKind::kSokoban
          ? Json::array({{{"size", 7}, {"vrr", 1.0}, {"dreamerv2", 0.65}, {"impala", 0.76}, {"ppo", 0.64}},
                         {{"size", 13}, {"vrr", 1.0}, {"dreamerv2", 0.04}, {"impala", 0.11}, {"ppo", 0.0}}})
          : Json::array({{{"size", 6}, {"vrr", 1.0}, {"dreamerv2", 1.0}, {"impala", 1.0}, {"ppo", 1.0}},
                         {{"size", 32}, {"vrr", 1.0}, {"dreamerv2", 0.0}, {"impala", 0.0}, {"ppo", 0.0}}}));
  return report;
}

/// DoorKey trained unrotated, evaluated on the original layout and on
/// layouts rotated by the configured set, once with per-facing rules and
/// once with rotation-symmetric learning.
inline MetricsReport run_table3(const ExperimentConfig& cfg) {
  if (cfg.game != GameKind::kDoorKey) throw ConfigError("table3 is a doorkey experiment");
  validate(cfg);
  MetricsReport report;
  report.json["experiment"] = "table3";
  report.json["config"] = config_json(cfg);
  std::vector<int> eval_rotations = cfg.rotations;
  if (eval_rotations == std::vector<int>{0}) eval_rotations = {0, 1, 2, 3};
  Json arms = Json::array();
  for (bool symmetric : {false, true}) {
    ExperimentConfig arm = cfg;
    arm.rotation_symmetry = symmetric;
    arm.rotations = {0};
    const GameConfig game = arm.game_config();
    AgentOptions eval_opt = arm.agent_options();
    eval_opt.learn = false;
    const auto runs = train_all(arm, game);
    Json rows = Json::array();
    for (const bool rotated : {false, true}) {
      GameConfig eval_game = game;
      eval_game.rotations = rotated ? eval_rotations : std::vector<int>{0};
      Json per_seed = Json::array();
      std::vector<double> returns;
      for (const auto& t : runs) {
        if (!rotated) check_training(t.result, report.invariants);
        EvalSummary e = evaluate(t.result.rules, eval_game, cfg.eval_seed, cfg.episodes, eval_opt, false,
                                 report.invariants);
        check_disjoint(t.result.run.level_seeds, e.level_seeds, report.invariants);
        Json row = eval_json(e);
        row["seed"] = t.seed;
        per_seed.push_back(row);
        returns.push_back(e.mean_return());
      }
      rows.push_back({{"layout", rotated ? "rotated" : "original"}, {"avg_return", stat_json(returns)},
                      {"per_seed", per_seed}});
    }
    Json train = Json::array();
    for (const auto& t : runs) train.push_back(train_json(t.seed, t.result));
    arms.push_back({{"learner", symmetric ? "rotation-symmetric" : "per-facing"}, {"train", train}, {"rows", rows}});
  }
  report.json["arms"] = arms;
  report.json["reference_values"] = quoted(Json::array(
      {{{"layout", "original"}, {"vrr", 1.0}, {"dreamerv2", 0.91}, {"impala", 1.0}, {"ppo", 1.0}},
       {{"layout", "rotated"}, {"vrr", 1.0}, {"dreamerv2", 0.07}, {"impala", 0.43}, {"ppo", 0.37}}}));
  return report;
}

/// Sokoban trained with the configured box count, evaluated with more.
inline MetricsReport run_boxsweep(const ExperimentConfig& cfg) {
  if (cfg.game != GameKind::kSokoban) throw ConfigError("boxsweep is a sokoban experiment");
  validate(cfg);
  MetricsReport report;
  const GameConfig game = cfg.game_config();
  AgentOptions eval_opt = cfg.agent_options();
  eval_opt.learn = false;
  report.json["experiment"] = "boxsweep";
  report.json["config"] = config_json(cfg);
  std::vector<int> counts = cfg.eval_boxes;
  if (counts.empty()) {
    for (int b = 1; b <= std::min(4, max_boxes(cfg.size)); ++b) counts.push_back(b);
  }
  const auto runs = train_all(cfg, game);
  Json rows = Json::array();
  std::vector<double> means;
  for (int boxes : counts) {
    GameConfig eval_game = game;
    eval_game.boxes = boxes;
    Json per_seed = Json::array();
    std::vector<double> returns, steps;
    for (const auto& t : runs) {
      if (boxes == counts.front()) check_training(t.result, report.invariants);
      EvalSummary e = evaluate(t.result.rules, eval_game, cfg.eval_seed, cfg.episodes, eval_opt, true,
                               report.invariants);
      check_disjoint(t.result.run.level_seeds, e.level_seeds, report.invariants);
      Json row = eval_json(e);
      row["seed"] = t.seed;
      per_seed.push_back(row);
      returns.push_back(e.mean_return());
      steps.push_back(e.mean_steps());
    }
    means.push_back(stat_of(returns).mean);
    rows.push_back({{"boxes", boxes},
                    {"avg_return", stat_json(returns)},
                    {"avg_steps", stat_json(steps)},
                    {"per_seed", per_seed}});
  }
  report.json["train"] = Json::array();
  for (const auto& t : runs) report.json["train"].push_back(train_json(t.seed, t.result));
  report.json["rows"] = rows;
  report.json["monotone_non_increasing"] = std::is_sorted(means.rbegin(), means.rend());
  report.json["reference_values"] = quoted(Json::array({{{"boxes", 1}, {"vrr", 1.0}}}));
  return report;
}

}  // namespace vrr
