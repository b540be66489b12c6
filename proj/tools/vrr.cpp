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

// Command-line front end: training, evaluation, demonstrations, the
// experiment tables, rule inspection and the session server.
//
// Exit codes: 0 all invariant checks passed, 1 some check failed,
// 2 bad usage or configuration, 3 runtime error.

#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "vrr/agent.hpp"
#include "vrr/harness.hpp"
#include "vrr/image.hpp"
#include "vrr/rules.hpp"
#include "vrr/session.hpp"
#include "vrr/trajectory.hpp"

namespace fs = std::filesystem;

namespace {

using vrr::ExperimentConfig;
using vrr::Json;

struct CommonFlags {
  std::string config_file;
  std::map<std::string, std::string> values;  // key -> raw flag value
};

// Flags mirror config keys; a flag given on the command line wins over the
// config file.
void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_file, "key=value configuration file");
  const std::pair<const char*, const char*> keys[] = {
      {"game", "sokoban or doorkey"},
      {"size", "board size in cells"},
      {"boxes", "Sokoban box count"},
      {"rotations", "DoorKey rotations in degrees, e.g. 0,90,180,270"},
      {"seed", "single training seed"},
      {"train-seeds", "comma-separated training seeds"},
      {"eval-seed", "evaluation seed (disjoint from training seeds)"},
      {"episodes", "evaluation episodes"},
      {"rules", "rule file path"},
      {"demo", "trajectory file path"},
      {"out", "output directory"},
      {"learn", "on or off"},
      {"budget", "planner node budget"},
      {"max-steps", "training step limit"},
      {"symmetry", "none or rot4"},
      {"reward", "sparse or shaped"},
      {"demo-steps", "scripted demonstration step limit"},
      {"eval-sizes", "table2 evaluation sizes"},
      {"eval-boxes", "boxsweep box counts"},
      {"jobs", "parallel training seeds"},
  };
  for (const auto& [key, help] : keys) {
    std::string k = key;
    cmd->add_option_function<std::string>(
        "--" + k, [&flags, k](const std::string& v) { flags.values[k] = v; }, help);
  }
}

ExperimentConfig build_config(const CommonFlags& flags) {
  ExperimentConfig cfg;
  if (!flags.config_file.empty()) vrr::load_config_file(flags.config_file, cfg);
  for (const auto& [flag, value] : flags.values) {
    std::string key = flag;
    std::replace(key.begin(), key.end(), '-', '_');
    vrr::set_config_value(cfg, key, value);
  }
  return cfg;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw vrr::Error("cannot write " + path.string());
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw vrr::Error("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

vrr::RuleSet load_rules_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw vrr::Error("cannot open rules file " + path);
  return vrr::load_rules(in);
}

// Writes <out>/<name>.json plus side files, or prints the report when no
// output directory is set. Wall-clock time goes to <name>.timing.json.
int finish(const ExperimentConfig& cfg, const std::string& name, const vrr::MetricsReport& report, double seconds) {
  if (cfg.out_dir.empty()) {
    std::cout << report.text();
  } else {
    const fs::path dir(cfg.out_dir);
    write_file(dir / (name + ".json"), report.text());
    for (const auto& [file, text] : report.files) write_file(dir / file, text);
    write_file(dir / (name + ".timing.json"), Json{{"wall_clock_seconds", seconds}}.dump(2) + "\n");
    std::cerr << "wrote " << (dir / (name + ".json")).string() << "\n";
  }
  if (!report.invariants.ok()) {
    for (const auto& f : report.invariants.failures()) std::cerr << "invariant failed: " << f << "\n";
    return 1;
  }
  return 0;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_train(const ExperimentConfig& cfg) {
  vrr::validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  vrr::TrainOptions opt;
  opt.max_steps = cfg.max_steps;
  opt.agent = cfg.agent_options();
  const std::uint64_t seed = cfg.train_seeds.front();
  const vrr::TrainResult r = vrr::train_from_scratch(cfg.game_config(), seed, opt);
  vrr::MetricsReport report;
  report.json["experiment"] = "train";
  report.json["config"] = vrr::config_json(cfg);
  report.json["train"] = vrr::train_json(seed, r);
  vrr::check_training(r, report.invariants);
  std::ostringstream curve;
  vrr::emit_curves(curve, r.run);
  report.files["curve.csv"] = curve.str();
  report.files["training.traj"] = vrr::trajectory_to_string(r.log);
  if (!cfg.rules_path.empty()) write_file(cfg.rules_path, vrr::rules_to_string(r.rules));
  if (cfg.out_dir.empty() && cfg.rules_path.empty()) std::cerr << "note: no --rules path, rules not saved\n";
  return finish(cfg, "train", report, since(t0));
}

int cmd_eval(const ExperimentConfig& cfg) {
  vrr::validate(cfg);
  if (cfg.rules_path.empty()) throw vrr::ConfigError("eval needs --rules");
  const auto t0 = std::chrono::steady_clock::now();
  const vrr::RuleSet rules = load_rules_file(cfg.rules_path);
  if (rules.game() != cfg.game) throw vrr::ConfigError("rule file is for " + std::string(vrr::game_name(rules.game())));
  vrr::MetricsReport report;
  report.json["experiment"] = "eval";
  report.json["config"] = vrr::config_json(cfg);
  report.json["rules_vocab_hash"] = rules.vocabulary().hash();
  const vrr::EvalSummary e = vrr::evaluate(rules, cfg.game_config(), cfg.eval_seed, cfg.episodes,
                                           cfg.agent_options(), cfg.game == vrr::GameKind::kSokoban && cfg.boxes > 1,
                                           report.invariants);
  report.json["eval"] = vrr::eval_json(e);
  return finish(cfg, "eval", report, since(t0));
}

int cmd_demo_import(const ExperimentConfig& cfg, const std::string& base) {
  if (cfg.demo_path.empty() || cfg.rules_path.empty()) throw vrr::ConfigError("demo-import needs --demo and --rules");
  std::ifstream in(cfg.demo_path);
  if (!in) throw vrr::Error("cannot open " + cfg.demo_path);
  const vrr::TrajectoryLog log = vrr::read_trajectory(in);
  vrr::RuleSet rules = base.empty() ? vrr::RuleSet(log.game) : load_rules_file(base);
  const std::size_t added = vrr::train_from_demonstrations(log, rules);
  write_file(cfg.rules_path, vrr::rules_to_string(rules));
  std::cerr << "imported " << log.records.size() << " records, " << added << " new rules\n";
  return 0;
}

int cmd_demo_record(const ExperimentConfig& cfg) {
  vrr::validate(cfg);
  if (cfg.demo_path.empty()) throw vrr::ConfigError("demo-record needs --demo");
  const vrr::TrajectoryLog log =
      vrr::record_demonstration(cfg.game_config(), cfg.train_seeds.front(), cfg.demo_steps, cfg.sprite_px);
  write_file(cfg.demo_path, vrr::trajectory_to_string(log));
  std::cerr << "recorded " << log.records.size() << " steps\n";
  return 0;
}

int cmd_dump_rules(const ExperimentConfig& cfg, bool all) {
  if (cfg.rules_path.empty()) throw vrr::ConfigError("dump-rules needs --rules");
  vrr::dump_rules(std::cout, load_rules_file(cfg.rules_path), all);
  return 0;
}

int cmd_level(const ExperimentConfig& cfg, const std::string& ppm) {
  vrr::validate(cfg);
  const vrr::Level level = vrr::make_level(cfg.game_config(), cfg.train_seeds.front());
  std::cout << vrr::level_to_string(level);
  if (!ppm.empty()) vrr::save_ppm(ppm, vrr::render(level, cfg.sprite_px));
  return 0;
}

vrr::LineServer* g_server = nullptr;

int cmd_serve(int port) {
  vrr::SessionManager manager;
  vrr::LineServer server(manager);
  const int bound = server.start(port);
  std::cout << "listening on 127.0.0.1:" << bound << std::endl;
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server != nullptr) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server != nullptr) g_server->stop();
  });
  server.wait();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visual rewrite rule agent for grid games"};
  app.require_subcommand(1);

  std::map<std::string, CommonFlags> flags;
  std::map<std::string, std::function<int(const ExperimentConfig&)>> runners;
  auto add = [&](const std::string& name, const std::string& help, std::function<int(const ExperimentConfig&)> fn) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd, flags[name]);
    runners[name] = std::move(fn);
    return cmd;
  };

  auto table = [](vrr::MetricsReport (*fn)(const ExperimentConfig&), std::string name) {
    return [fn, name](const ExperimentConfig& cfg) {
      const auto t0 = std::chrono::steady_clock::now();
      const vrr::MetricsReport report = fn(cfg);
      return finish(cfg, name, report, since(t0));
    };
  };

  std::string base_rules;
  bool all_rules = false;
  std::string ppm;
  int port = 7070;

  add("train", "train from scratch on one seed", cmd_train);
  add("eval", "evaluate a rule file", cmd_eval);
  add("demo-import", "learn rules from a trajectory file", [&](const ExperimentConfig& c) {
    return cmd_demo_import(c, base_rules);
  })->add_option("--base", base_rules, "existing rule file to extend");
  add("demo-record", "write a scripted demonstration", cmd_demo_record);
  add("table1", "scratch vs demonstration training", table(vrr::run_table1, "table1"));
  add("table2", "zero-shot board size", table(vrr::run_table2, "table2"));
  add("table3", "zero-shot rotation (doorkey)", table(vrr::run_table3, "table3"));
  add("boxsweep", "zero-shot box count (sokoban)", table(vrr::run_boxsweep, "boxsweep"));
  add("dump-rules", "print a rule file as before/after grids", [&](const ExperimentConfig& c) {
    return cmd_dump_rules(c, all_rules);
  })->add_flag("--all", all_rules, "include inactive rules");
  add("level", "print a generated level", [&](const ExperimentConfig& c) { return cmd_level(c, ppm); })
      ->add_option("--ppm", ppm, "also write the rendered level");
  CLI::App* serve = app.add_subcommand("serve", "run the session server");
  serve->add_option("--port", port, "TCP port on 127.0.0.1 (0 picks one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (serve->parsed()) return cmd_serve(port);
    for (auto& [name, fn] : runners) {
      if (app.got_subcommand(name)) return fn(build_config(flags[name]));
    }
  } catch (const vrr::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
