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

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "vrr/session.hpp"
#include "vrr/solver.hpp"

namespace vrr {
namespace {

using Json = detail::WireJson;

Json create(SessionManager& m, Json config) { return m.handle({{"type", "create"}, {"config", std::move(config)}}); }

TEST(Protocol, HelloAndErrors) {
  SessionManager m;
  EXPECT_EQ(m.handle({{"type", "hello"}, {"proto_version", 1}})["type"], "hello");
  EXPECT_EQ(m.handle({{"type", "hello"}, {"proto_version", 2}})["code"], "unsupported_version");
  EXPECT_EQ(Json::parse(m.handle_line("{not json"))["code"], "bad_request");
  EXPECT_EQ(m.handle({{"type", "warp"}})["code"], "bad_request");
  EXPECT_EQ(m.handle({{"type", "state"}, {"session", "s9"}})["code"], "unknown_session");
  EXPECT_EQ(create(m, {{"game", "chess"}})["code"], "invalid_config");
  EXPECT_EQ(create(m, {{"mode", "spectate"}})["code"], "invalid_config");
  EXPECT_EQ(create(m, {{"size", "big"}})["code"], "bad_request");
}

TEST(Protocol, HumanSessionReportsDeltasAndRules) {
  SessionManager m;
  const Json s = create(m, {{"game", "sokoban"}, {"mode", "human_demo"}, {"size", 7}, {"seed", 3}});
  ASSERT_EQ(s["type"], "state") << s.dump();
  const std::string id = s["session"];
  EXPECT_EQ(s["grid"]["width"], 7);
  EXPECT_EQ(m.handle({{"type", "act"}, {"session", id}, {"action_id", 9}})["code"], "bad_action");
  EXPECT_EQ(m.handle({{"type", "agent_step"}, {"session", id}})["code"], "wrong_mode");

  const Level level = generate_sokoban(3, 7, 1);
  const auto plan = solve_level(level).solution;
  ASSERT_TRUE(plan.has_value());
  std::size_t rules_seen = 0;
  Json last;
  for (ActionId a : *plan) {
    last = m.handle({{"type", "act"}, {"session", id}, {"action_id", a}});
    ASSERT_EQ(last["type"], "delta") << last.dump();
    rules_seen += last["new_rules"].size();
  }
  EXPECT_TRUE(last["done"].get<bool>());
  EXPECT_TRUE(last["won"].get<bool>());
  EXPECT_EQ(last["rule_count"].get<std::size_t>(), rules_seen);
  EXPECT_EQ(m.handle({{"type", "act"}, {"session", id}, {"action_id", 0}})["code"], "terminal");
}

// Rules learned live by the server equal rules learned offline from the
// exported trajectory.
TEST(Protocol, ExportThenImportMatchesLiveRules) {
  for (GameKind kind : {GameKind::kSokoban, GameKind::kDoorKey}) {
    SessionManager m;
    const bool sokoban = kind == GameKind::kSokoban;
    const Json s = create(m, {{"game", sokoban ? "sokoban" : "doorkey"}, {"mode", "human_demo"},
                              {"size", sokoban ? 7 : 6}, {"seed", 8}});
    const std::string id = s["session"];
    const Level level = sokoban ? generate_sokoban(8, 7, 1) : generate_doorkey(8, 6, 0);
    // A few wandering moves, then the shortest finish from wherever they led.
    std::vector<ActionId> script{2, 0, 0, 3, 1};
    Level sim = level;
    for (ActionId a : script) sim = step(sim, a).next_state;
    const SolveResult solved = solve_level(sim);
    ASSERT_TRUE(solved.solution.has_value());
    script.insert(script.end(), solved.solution->begin(), solved.solution->end());
    for (ActionId a : script) {
      const Json d = m.handle({{"type", "act"}, {"session", id}, {"action_id", a}});
      ASSERT_EQ(d["type"], "delta") << d.dump();
      if (d["done"].get<bool>()) break;
    }
    const Json exported = m.handle({{"type", "export"}, {"session", id}});
    ASSERT_EQ(exported["type"], "export") << exported.dump();
    RuleSet offline(kind);
    train_from_demonstrations(trajectory_from_string(exported["trajectory"].get<std::string>()), offline);
    EXPECT_EQ(rules_to_string(offline), rules_to_string(m.session(id)->rules()));
    EXPECT_GT(offline.size(), 0u);
  }
}

TEST(Protocol, AgentSessionFindsItsOwnAgentAndPlays) {
  SessionManager m;
  const Json s = create(m, {{"game", "doorkey"}, {"mode", "agent_watch"}, {"size", 6}, {"seed", 3}});
  const std::string id = s["session"];
  std::set<std::string> kinds;
  Json plan;
  for (int i = 0; i < 400; ++i) {
    plan = m.handle({{"type", "agent_step"}, {"session", id}});
    ASSERT_EQ(plan["type"], "plan") << plan.dump();
    kinds.insert(plan["kind"].get<std::string>());
    if (plan["state"]["done"].get<bool>()) break;
  }
  EXPECT_TRUE(plan["state"]["done"].get<bool>());
  EXPECT_TRUE(kinds.contains("warmup"));
  EXPECT_TRUE(kinds.contains("explore"));
  EXPECT_EQ(m.handle({{"type", "agent_step"}, {"session", id}})["code"], "terminal");
}

TEST(Protocol, FrozenAgentWithoutRulesHasNoAgent) {
  SessionManager m;
  const Json s = create(m, {{"game", "sokoban"}, {"mode", "agent_watch"}, {"learn", false}});
  EXPECT_EQ(m.handle({{"type", "agent_step"}, {"session", s["session"]}})["code"], "no_agent");
}

TEST(Server, AnswersOverTcp) {
  SessionManager m;
  LineServer server(m);
  const int port = server.start(0);
  ASSERT_GT(port, 0);
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  const std::string req = "{\"type\":\"hello\",\"proto_version\":1}\n{\"type\":\"create\",\"config\":{}}\n";
  ASSERT_EQ(::send(fd, req.data(), req.size(), 0), static_cast<ssize_t>(req.size()));
  std::string got;
  char buf[4096];
  while (std::count(got.begin(), got.end(), '\n') < 2) {
    const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    ASSERT_GT(n, 0);
    got.append(buf, static_cast<std::size_t>(n));
  }
  ::close(fd);
  server.stop();
  server.wait();
  const auto nl = got.find('\n');
  EXPECT_EQ(Json::parse(got.substr(0, nl))["type"], "hello");
  EXPECT_EQ(Json::parse(got.substr(nl + 1, got.find('\n', nl + 1) - nl - 1))["session"], "s1");
}

}  // namespace
}  // namespace vrr
