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

// Interactive sessions for human play and for watching the agent, spoken as
// line-delimited JSON. Every message is one object with a "type" field.
//
// Client to server:
//   {"type":"hello","proto_version":1}
//   {"type":"create","config":{"game","size","boxes","rotation","seed","mode","learn","rules","level"}}
//   {"type":"state","session":S}
//   {"type":"act","session":S,"action_id":A}
//   {"type":"agent_step","session":S}
//   {"type":"export","session":S}
//
// Server to client:
//   hello{proto_version}   state{session,grid,agent,done,reward,...}
//   delta{session,cells,new_rules,...}   plan{session,kind,actions,predicted,...}
//   export{session,trajectory}   error{code,msg}
//
// Grids travel as {"width","height","rle"} with the trajectory file's RLE;
// "vocab" lists sprite digests by id so a client can draw tiles without
// sharing code with the learner.

#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vrr/agent.hpp"
#include "vrr/planner.hpp"
#include "vrr/rules.hpp"
#include "vrr/trajectory.hpp"

namespace vrr {

inline constexpr int kProtoVersion = 1;

enum class SessionMode { kHumanDemo, kAgentWatch };

/// Error reported to the client as error{code, msg}.
class ProtocolError : public Error {
 public:
  ProtocolError(std::string code, const std::string& msg) : Error(msg), code_(std::move(code)) {}
  [[nodiscard]] const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

namespace detail {

using WireJson = nlohmann::ordered_json;

inline WireJson grid_json(const ObjectGrid& g) {
  return WireJson{{"width", g.width()}, {"height", g.height()}, {"rle", encode_rle(g)}};
}

inline WireJson pos_json(Pos p) { return WireJson::array({p.row, p.col}); }

inline WireJson pattern_values(const LocalPattern& p) {
  WireJson out = WireJson::array();
  for (ObjectId v : p.values) out.push_back(v == kOutside ? WireJson(nullptr) : WireJson(v));
  return out;
}

inline WireJson rule_json(const RewriteRule& r, GameKind game) {
  WireJson mask = WireJson::array();
  for (Offset o : r.before.mask) mask.push_back({o.drow, o.dcol});
  return WireJson{{"ordinal", r.ordinal},
                  {"action", r.action},
                  {"action_name", action_name(game, r.action)},
                  {"identity", r.identity},
                  {"reward", r.reward},
                  {"mask", mask},
                  {"before", pattern_values(r.before)},
                  {"after", pattern_values(r.after)}};
}

template <typename T>
T field(const WireJson& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError("bad_request", std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace detail

/// One game in progress: the level, the learner's rule set, and every
/// transition seen so far.
///
/// With an empty rule set the agent sprite is unknown until the recorded
/// changes single it out; transitions are buffered until then and learned
/// in order once it is known.
class Session {
 public:
  using Json = detail::WireJson;

  Session(std::string id, Level level, RuleSet rules, SessionMode mode, bool learn, int sprite_px)
      : id_(std::move(id)), level_(std::move(level)), rules_(std::move(rules)), mode_(mode), learn_(learn),
        opt_{learn, 500'000, sprite_px, sprite_px, false} {
    if (!rules_.vocabulary().empty()) opt_.cell_size = rules_.vocabulary().entry(0).width;
    grid_ = observe(level_);
    if (!rules_.agent_group().empty()) {
      extend_agent_group(grid_, ObjectGrid{}, first_new_, rules_.agent_group());
      agent_ = locate_agent(grid_, rules_.agent_group()).pos;
    }
  }

  [[nodiscard]] const std::string& id() const noexcept { return id_; }
  [[nodiscard]] const RuleSet& rules() const noexcept { return rules_; }
  [[nodiscard]] const Level& level() const noexcept { return level_; }
  [[nodiscard]] std::size_t records() const noexcept { return records_.size(); }

  Json state() {
    std::lock_guard lock(mu_);
    return state_locked();
  }

  Json act(ActionId action) {
    std::lock_guard lock(mu_);
    if (mode_ != SessionMode::kHumanDemo) throw ProtocolError("wrong_mode", "act needs a human_demo session");
    if (action < 0 || action >= action_count(level_.kind)) throw ProtocolError("bad_action", "action id out of range");
    if (level_.done) throw ProtocolError("terminal", "the episode is over");
    const ObjectGrid before = grid_;
    const std::size_t vocab_before = rules_.vocabulary().size();
    const std::size_t rules_before = rules_.size();
    const StepOutcome out = transition(action);
    Json j{{"type", "delta"}, {"session", id_}};
    Json cells = Json::array();
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      if (grid_.cells()[i] != before.cells()[i]) {
        const Pos p = grid_.pos_of(i);
        cells.push_back({p.row, p.col, grid_.cells()[i]});
      }
    }
    j["cells"] = cells;
    j["new_rules"] = new_rules(rules_before);
    j["vocab_added"] = vocab_since(vocab_before);
    j["reward"] = out.reward;
    j["done"] = out.done;
    j["won"] = out.won;
    j["agent"] = agent_ ? detail::pos_json(*agent_) : Json(nullptr);
    j["rule_count"] = rules_.size();
    return j;
  }

  /// One plan/execute cycle of the agent.
  Json agent_step() {
    std::lock_guard lock(mu_);
    if (mode_ != SessionMode::kAgentWatch) throw ProtocolError("wrong_mode", "agent_step needs an agent_watch session");
    if (level_.done || gave_up_) throw ProtocolError("terminal", "the episode is over");
    if (!agent_ && !learn_) throw ProtocolError("no_agent", "the agent sprite is not known yet");
    if (!agent_) return warmup_step();
    const PlanResult plan = bfs_plan(rules_, grid_, *agent_, {opt_.budget, &refuted_, nullptr});
    Json j{{"type", "plan"}, {"session", id_}, {"kind", plan_kind_name(plan.kind)}};
    j["actions"] = plan.actions;
    Json predicted = Json::array();
    if (!plan.actions.empty()) {
      for (const Prediction& p : replay_plan(rules_, grid_, *agent_, plan.actions)) {
        predicted.push_back(p.known() ? Json{{"known", true}, {"grid", detail::grid_json(*p.next_state)}, {"reward", p.reward}}
                                      : Json{{"known", false}});
      }
    }
    j["predicted"] = predicted;
    j["nodes_expanded"] = plan.nodes_expanded;
    const std::size_t rules_before = rules_.size();
    const std::size_t vocab_before = rules_.vocabulary().size();
    std::size_t executed = 0;
    if (plan.kind == PlanKind::kWin || plan.kind == PlanKind::kExplore) {
      for (ActionId a : plan.actions) {
        const Prediction pred = apply(rules_, grid_, a, *agent_);
        const StepOutcome out = transition(a);
        ++executed;
        const bool matched = pred.known() && *pred.next_state == grid_ && pred.reward == out.reward;
        if (pred.known() && pred.reward > 0.0 && !out.won) refuted_.insert(*pred.next_state);
        if (level_.done || !matched) break;
      }
    } else {
      gave_up_ = true;
    }
    j["executed"] = executed;
    j["new_rules"] = new_rules(rules_before);
    j["vocab_added"] = vocab_since(vocab_before);
    j["state"] = state_locked();
    return j;
  }

  // Until the agent sprite is known there is nothing to plan with; take a
  // seeded random action and let the recorded changes identify it.
  Json warmup_step() {
    const ActionId a = warmup_rng_.uniform(0, action_count(level_.kind) - 1);
    const std::size_t rules_before = rules_.size();
    const std::size_t vocab_before = rules_.vocabulary().size();
    transition(a);
    Json j{{"type", "plan"}, {"session", id_}, {"kind", "warmup"}};
    j["actions"] = Json::array({a});
    j["predicted"] = Json::array();
    j["nodes_expanded"] = 0;
    j["executed"] = 1;
    j["new_rules"] = new_rules(rules_before);
    j["vocab_added"] = vocab_since(vocab_before);
    j["state"] = state_locked();
    return j;
  }

  /// The trajectory file for everything recorded so far.
  std::string export_demo() {
    std::lock_guard lock(mu_);
    if (!records_.empty() && rules_.agent_group().empty()) identify(true);
    return trajectory_to_string(log_locked());
  }

  TrajectoryLog log() {
    std::lock_guard lock(mu_);
    return log_locked();
  }

 private:
  struct Pending {
    ObjectGrid before;
    ObjectGrid after;
    ActionId action;
    int step;
    double reward;
    bool done;
  };

  ObjectGrid observe(const Level& level) {
    first_new_ = static_cast<ObjectId>(rules_.vocabulary().size());
    return tokenize(render(level, opt_.sprite_px), opt_.cell_size, rules_.vocabulary());
  }

  StepOutcome transition(ActionId action) {
    const StepOutcome out = step(level_, action, reward_);
    const ObjectGrid before = grid_;
    grid_ = observe(out.next_state);
    level_ = out.next_state;
    if (agent_) {
      extend_agent_group(grid_, before, 0, rules_.agent_group());
      record(before, *agent_, action, out);
      agent_ = locate_agent(grid_, rules_.agent_group()).pos;
    } else {
      pending_.push_back({before, grid_, action, out.steps, out.reward, out.done});
      identify(false);
    }
    return out;
  }

  void record(const ObjectGrid& before, Pos agent, ActionId action, const StepOutcome& out) {
    records_.push_back({0, out.steps, action, out.reward, out.done, agent, before, grid_});
    if (learn_) learn_rule(rules_, before, grid_, action, out.reward, agent);
  }

  // Identification waits for evidence that cannot be confused: at least two
  // changes, with every change touching the agent. `force` accepts whatever
  // the identification picks (used on export).
  void identify(bool force) {
    std::vector<Transition> pairs;
    std::size_t changes = 0;
    for (const auto& p : pending_) {
      pairs.emplace_back(p.before, p.after);
      changes += p.before == p.after ? 0 : 1;
    }
    if (changes == 0 || (!force && changes < 2)) return;
    AgentIdentity identity;
    try {
      identity = identify_agent(pairs);
    } catch (const PerceptionError&) {
      if (force) throw ProtocolError("no_agent", "the agent sprite could not be identified");
      return;
    }
    std::vector<ObjectGrid> frames;
    for (const auto& p : pending_) {
      frames.push_back(p.before);
      frames.push_back(p.after);
    }
    std::vector<ObjectId> group = identity.group;
    complete_agent_group(frames, group);
    std::vector<Pos> positions;
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      const ObjectGrid& prev = i == 0 ? ObjectGrid{} : pending_[i - 1].before;
      extend_agent_group(pending_[i].before, prev, 0, group);
      try {
        positions.push_back(locate_agent(pending_[i].before, group).pos);
      } catch (const PerceptionError&) {
        if (force) throw ProtocolError("no_agent", "the agent sprite could not be identified");
        return;
      }
    }
    if (!force) {
      for (std::size_t i = 0; i < pending_.size(); ++i) {
        if (pending_[i].before == pending_[i].after) continue;
        const CellMask d = diff_mask(pending_[i].before, pending_[i].after, positions[i]);
        if (!d.contains({0, 0})) return;
      }
    }
    rules_.agent_group() = group;
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      const Pending& p = pending_[i];
      records_.push_back({0, p.step, p.action, p.reward, p.done, positions[i], p.before, p.after});
      if (learn_) learn_rule(rules_, p.before, p.after, p.action, p.reward, positions[i]);
    }
    pending_.clear();
    extend_agent_group(grid_, ObjectGrid{}, 0, rules_.agent_group());
    agent_ = locate_agent(grid_, rules_.agent_group()).pos;
  }

  Json new_rules(std::size_t rules_before) const {
    Json out = Json::array();
    for (std::size_t i = rules_before; i < rules_.size(); ++i) out.push_back(detail::rule_json(rules_.rules()[i], level_.kind));
    return out;
  }

  Json vocab_since(std::size_t from) const {
    Json out = Json::array();
    for (std::size_t i = from; i < rules_.vocabulary().size(); ++i) {
      out.push_back({{"id", i}, {"sha256", rules_.vocabulary().entry(static_cast<ObjectId>(i)).digest}});
    }
    return out;
  }

  Json state_locked() const {
    Json vocab = Json::array();
    for (const auto& e : rules_.vocabulary().entries()) vocab.push_back(e.digest);
    return Json{{"type", "state"},
                {"session", id_},
                {"game", game_name(level_.kind)},
                {"mode", mode_ == SessionMode::kHumanDemo ? "human_demo" : "agent_watch"},
                {"grid", detail::grid_json(grid_)},
                {"vocab", vocab},
                {"agent", agent_ ? detail::pos_json(*agent_) : Json(nullptr)},
                {"done", level_.done || gave_up_},
                {"won", level_.done && !gave_up_ && won()},
                {"gave_up", gave_up_},
                {"reward", records_.empty() ? 0.0 : records_.back().reward},
                {"steps", level_.steps},
                {"records", records_.size() + pending_.size()},
                {"rule_count", rules_.size()}};
  }

  bool won() const {
    return !records_.empty() && records_.back().done && records_.back().reward > 0.0 && level_.steps < level_.step_cap();
  }

  TrajectoryLog log_locked() const {
    TrajectoryLog log;
    log.game = level_.kind;
    log.width = grid_.width();
    log.height = grid_.height();
    log.vocab = rules_.vocabulary();
    log.agents = rules_.agent_group();
    log.records = records_;
    return log;
  }

  std::mutex mu_;
  std::string id_;
  Level level_;
  RuleSet rules_;
  SessionMode mode_;
  bool learn_;
  AgentOptions opt_;
  RewardScheme reward_;
  ObjectGrid grid_;
  ObjectId first_new_ = 0;
  std::optional<Pos> agent_;
  std::vector<TrajectoryRecord> records_;
  std::vector<Pending> pending_;
  StateSet refuted_;
  bool gave_up_ = false;
  Rng warmup_rng_{derive_seed(level_.seed, 0xA11CE)};
};

/// Owns sessions and turns request messages into response messages.
class SessionManager {
 public:
  using Json = detail::WireJson;

  /// Handles one message. Never throws; failures become error messages.
  Json handle(const Json& msg) {
    try {
      if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
        throw ProtocolError("bad_request", "message must be an object with a string 'type'");
      }
      const std::string type = msg["type"];
      if (type == "hello") {
        const int version = detail::field<int>(msg, "proto_version", kProtoVersion);
        if (version != kProtoVersion) throw ProtocolError("unsupported_version", "protocol version must be 1");
        return Json{{"type", "hello"}, {"proto_version", kProtoVersion}};
      }
      if (type == "create") return create(msg.contains("config") ? msg["config"] : Json::object());
      auto session = find(msg);
      if (type == "state") return session->state();
      if (type == "act") {
        if (!msg.contains("action_id")) throw ProtocolError("bad_request", "act needs action_id");
        return session->act(detail::field<int>(msg, "action_id", -1));
      }
      if (type == "agent_step") return session->agent_step();
      if (type == "export") return Json{{"type", "export"}, {"session", session->id()}, {"trajectory", session->export_demo()}};
      throw ProtocolError("bad_request", "unknown message type '" + type + "'");
    } catch (const ProtocolError& e) {
      return error(e.code(), e.what());
    } catch (const std::exception& e) {
      return error("internal", e.what());
    }
  }

  /// Line in, line out.
  std::string handle_line(const std::string& line) {
    Json msg;
    try {
      msg = Json::parse(line);
    } catch (const nlohmann::json::exception&) {
      return error("bad_request", "malformed JSON").dump();
    }
    return handle(msg).dump();
  }

  std::shared_ptr<Session> session(const std::string& id) {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

 private:
  static Json error(const std::string& code, const std::string& msg) {
    return Json{{"type", "error"}, {"code", code}, {"msg", msg}};
  }

  std::shared_ptr<Session> find(const Json& msg) {
    if (!msg.contains("session") || !msg["session"].is_string()) throw ProtocolError("bad_request", "missing session id");
    auto s = session(msg["session"].get<std::string>());
    if (!s) throw ProtocolError("unknown_session", "no such session");
    return s;
  }

  Json create(const Json& cfg) {
    if (!cfg.is_object()) throw ProtocolError("invalid_config", "config must be an object");
    const std::string game_text = detail::field<std::string>(cfg, "game", "sokoban");
    GameKind game{};
    try {
      game = parse_game(game_text);
    } catch (const Error&) {
      throw ProtocolError("invalid_config", "unknown game '" + game_text + "'");
    }
    const std::string mode_text = detail::field<std::string>(cfg, "mode", "human_demo");
    if (mode_text != "human_demo" && mode_text != "agent_watch") throw ProtocolError("invalid_config", "unknown mode");
    const bool learn = detail::field<bool>(cfg, "learn", true);
    const int sprite_px = detail::field<int>(cfg, "sprite_px", 16);
    if (sprite_px < 4 || sprite_px > 64) throw ProtocolError("invalid_config", "sprite_px must be in [4, 64]");
    Level level;
    try {
      if (cfg.contains("level")) {
        level = level_from_string(detail::field<std::string>(cfg, "level", ""));
        if (level.kind != game) throw ProtocolError("invalid_config", "level is for another game");
      } else {
        const int size = detail::field<int>(cfg, "size", game == GameKind::kSokoban ? 7 : 6);
        const auto seed = detail::field<std::uint64_t>(cfg, "seed", 0);
        if (size < 5 || size > 64) throw ProtocolError("invalid_config", "size must be in [5, 64]");
        if (game == GameKind::kSokoban) {
          const int boxes = detail::field<int>(cfg, "boxes", 1);
          if (boxes < 1 || boxes > (size - 2) * (size - 2) / 4) throw ProtocolError("invalid_config", "bad box count");
          level = generate_sokoban(seed, size, boxes);
        } else {
          const int deg = detail::field<int>(cfg, "rotation", 0);
          if (deg % 90 != 0 || deg < 0 || deg >= 360) throw ProtocolError("invalid_config", "bad rotation");
          level = generate_doorkey(seed, size, deg / 90);
        }
      }
    } catch (const ProtocolError&) {
      throw;
    } catch (const Error& e) {
      throw ProtocolError("invalid_config", e.what());
    }
    RuleSet rules(game);
    if (cfg.contains("rules")) {
      const std::string path = detail::field<std::string>(cfg, "rules", "");
      std::ifstream in(path);
      if (!in) throw ProtocolError("invalid_config", "cannot open rules file");
      try {
        rules = load_rules(in);
      } catch (const Error& e) {
        throw ProtocolError("invalid_config", e.what());
      }
      if (rules.game() != game) throw ProtocolError("invalid_config", "rules are for another game");
    }
    std::string id;
    {
      std::lock_guard lock(mu_);
      id = "s" + std::to_string(++next_id_);
    }
    auto s = std::make_shared<Session>(id, std::move(level), std::move(rules),
                                       mode_text == "human_demo" ? SessionMode::kHumanDemo : SessionMode::kAgentWatch,
                                       learn, sprite_px);
    {
      std::lock_guard lock(mu_);
      sessions_[id] = s;
    }
    return s->state();
  }

  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 0;
};

/// Localhost TCP server: one thread per connection, one JSON message per
/// line each way. Messages on a connection are answered in order.
class LineServer {
 public:
  explicit LineServer(SessionManager& manager) : manager_(manager) {}
  ~LineServer() { stop(); }

  LineServer(const LineServer&) = delete;
  LineServer& operator=(const LineServer&) = delete;

  /// Binds 127.0.0.1:`port` (0 picks a free port) and returns the port.
  int start(int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw Error("socket() failed");
    const int yes = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(fd_, 16) != 0) {
      ::close(fd_);
      fd_ = -1;
      throw Error("cannot listen on port " + std::to_string(port));
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
    return ntohs(addr.sin_port);
  }

  void stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<std::thread> workers;
    {
      std::lock_guard lock(mu_);
      for (int c : clients_) ::shutdown(c, SHUT_RDWR);
      workers.swap(workers_);
    }
    for (auto& t : workers) t.join();
  }

  /// Blocks until stop() is called from elsewhere.
  void wait() {
    if (acceptor_.joinable()) acceptor_.join();
  }

 private:
  void accept_loop() {
    while (running_) {
      const int client = ::accept(fd_, nullptr, nullptr);
      if (client < 0) {
        if (!running_) break;
        continue;
      }
      std::lock_guard lock(mu_);
      clients_.push_back(client);
      workers_.emplace_back([this, client] { serve(client); });
    }
  }

  void serve(int client) {
    std::string buffer;
    char chunk[4096];
    for (;;) {
      const ssize_t n = ::recv(client, chunk, sizeof(chunk), 0);
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      for (auto nl = buffer.find('\n'); nl != std::string::npos; nl = buffer.find('\n')) {
        const std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (line.empty()) continue;
        const std::string reply = manager_.handle_line(line) + "\n";
        for (std::size_t sent = 0; sent < reply.size();) {
          const ssize_t k = ::send(client, reply.data() + sent, reply.size() - sent, MSG_NOSIGNAL);
          if (k <= 0) {
            ::close(client);
            return;
          }
          sent += static_cast<std::size_t>(k);
        }
      }
    }
    ::close(client);
  }

  SessionManager& manager_;
  int fd_ = -1;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex mu_;
  std::vector<int> clients_;
  std::vector<std::thread> workers_;
};

}  // namespace vrr
