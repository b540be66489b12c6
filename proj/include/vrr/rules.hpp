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

// Visual rewrite rules: a table keyed by (action, local pattern around the
// agent) whose values are the rewritten pattern and the reward. The table is
// both learned from observed transitions and used as an exact world model.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vrr/grid.hpp"
#include "vrr/gridworld.hpp"
#include "vrr/perception.hpp"

namespace vrr {

/// Cell offset relative to the agent.
struct Offset {
  int drow = 0;
  int dcol = 0;

  auto operator<=>(const Offset&) const = default;
};

inline constexpr Pos operator+(Pos p, Offset o) { return {p.row + o.drow, p.col + o.dcol}; }

/// Set of agent-relative offsets, kept sorted and unique.
class CellMask {
 public:
  CellMask() = default;
  explicit CellMask(std::vector<Offset> offsets) : offsets_(std::move(offsets)) {
    std::sort(offsets_.begin(), offsets_.end());
    offsets_.erase(std::unique(offsets_.begin(), offsets_.end()), offsets_.end());
  }

  [[nodiscard]] std::size_t size() const noexcept { return offsets_.size(); }
  [[nodiscard]] bool empty() const noexcept { return offsets_.empty(); }
  [[nodiscard]] const std::vector<Offset>& offsets() const noexcept { return offsets_; }
  [[nodiscard]] auto begin() const noexcept { return offsets_.begin(); }
  [[nodiscard]] auto end() const noexcept { return offsets_.end(); }

  [[nodiscard]] bool contains(Offset o) const { return std::binary_search(offsets_.begin(), offsets_.end(), o); }

  [[nodiscard]] bool includes(const CellMask& other) const {
    return std::includes(offsets_.begin(), offsets_.end(), other.offsets_.begin(), other.offsets_.end());
  }

  [[nodiscard]] CellMask united(const CellMask& other) const {
    std::vector<Offset> out;
    std::set_union(offsets_.begin(), offsets_.end(), other.offsets_.begin(), other.offsets_.end(),
                   std::back_inserter(out));
    return CellMask(std::move(out));
  }

  [[nodiscard]] CellMask intersected(const CellMask& other) const {
    std::vector<Offset> out;
    std::set_intersection(offsets_.begin(), offsets_.end(), other.offsets_.begin(), other.offsets_.end(),
                          std::back_inserter(out));
    return CellMask(std::move(out));
  }

  bool operator==(const CellMask&) const = default;

 private:
  std::vector<Offset> offsets_;
};

/// Values of a grid over a mask placed at some agent position.
struct LocalPattern {
  CellMask mask;
  std::vector<ObjectId> values;  // one per mask offset, kOutside off-board

  bool operator==(const LocalPattern&) const = default;
};

inline LocalPattern extract_pattern(const ObjectGrid& grid, Pos agent, const CellMask& mask) {
  LocalPattern p{mask, {}};
  p.values.reserve(mask.size());
  for (Offset o : mask) p.values.push_back(grid.value_or(agent + o, kOutside));
  return p;
}

struct RewriteRule {
  ActionId action = 0;
  LocalPattern before;
  LocalPattern after;
  double reward = 0.0;
  bool identity = false;  // learned from a transition with no change
  std::size_t ordinal = 0;

  bool operator==(const RewriteRule&) const = default;
};

enum class PredictionStatus { kKnownRule, kUnknownRule };

struct Prediction {
  std::optional<ObjectGrid> next_state;
  double reward = 0.0;
  PredictionStatus status = PredictionStatus::kUnknownRule;
  Pos next_agent;
  std::optional<std::size_t> rule;  // ordinal of the matching rule

  [[nodiscard]] bool known() const noexcept { return status == PredictionStatus::kKnownRule; }
};

class RuleConflictError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

enum class LearnOutcome { kAddedChange, kAddedIdentity, kAlreadyKnown, kAssumedNull, kReplacedStale };

struct LearnResult {
  LearnOutcome outcome = LearnOutcome::kAlreadyKnown;
  std::optional<std::size_t> rule;

  [[nodiscard]] bool added() const noexcept {
    return outcome == LearnOutcome::kAddedChange || outcome == LearnOutcome::kAddedIdentity;
  }
};

/// The rule dictionary plus the object vocabulary and agent sprites it is
/// expressed in.
///
/// Rules are bucketed per action by mask; buckets are visited largest mask
/// first, then by the ordinal of their first rule. Identity rules are keyed
/// on the expectation scope (union of all change-rule masks) in force when
/// they were learned and are ignored once that scope has grown, since they
/// no longer cover every cell a change rule may read.
class RuleSet {
 public:
  explicit RuleSet(GameKind game = GameKind::kSokoban)
      : game_(game), buckets_(static_cast<std::size_t>(action_count(game))),
        null_(static_cast<std::size_t>(action_count(game)), false) {}

  [[nodiscard]] GameKind game() const noexcept { return game_; }
  [[nodiscard]] int actions() const noexcept { return action_count(game_); }
  [[nodiscard]] std::size_t size() const noexcept { return rules_.size(); }
  [[nodiscard]] bool empty() const noexcept { return rules_.empty(); }
  [[nodiscard]] const std::vector<RewriteRule>& rules() const noexcept { return rules_; }

  Vocabulary& vocabulary() noexcept { return vocab_; }
  [[nodiscard]] const Vocabulary& vocabulary() const noexcept { return vocab_; }
  std::vector<ObjectId>& agent_group() noexcept { return agent_group_; }
  [[nodiscard]] const std::vector<ObjectId>& agent_group() const noexcept { return agent_group_; }

  [[nodiscard]] bool assumed_null(ActionId a) const { return null_.at(static_cast<std::size_t>(a)); }
  [[nodiscard]] const CellMask& expectation_scope() const noexcept { return scope_; }

  [[nodiscard]] bool is_active(const RewriteRule& rule) const noexcept {
    return !rule.identity || rule.before.mask.size() == scope_.size();
  }

  [[nodiscard]] std::size_t active_count() const {
    return static_cast<std::size_t>(
        std::count_if(rules_.begin(), rules_.end(), [this](const RewriteRule& r) { return is_active(r); }));
  }

  /// Finds the first active rule matching `grid` around `agent`.
  [[nodiscard]] const RewriteRule* match(ActionId a, const ObjectGrid& grid, Pos agent) const {
    std::vector<ObjectId> values;
    for (const Bucket& b : buckets_.at(static_cast<std::size_t>(a))) {
      values.clear();
      for (Offset o : b.mask) values.push_back(grid.value_or(agent + o, kOutside));
      auto it = b.index.find(values);
      if (it == b.index.end()) continue;
      const RewriteRule& rule = rules_[it->second];
      if (is_active(rule)) return &rule;
    }
    return nullptr;
  }

  [[nodiscard]] const RewriteRule* find(ActionId a, const LocalPattern& before) const {
    for (const Bucket& b : buckets_.at(static_cast<std::size_t>(a))) {
      if (b.mask != before.mask) continue;
      auto it = b.index.find(before.values);
      return it == b.index.end() ? nullptr : &rules_[it->second];
    }
    return nullptr;
  }

  /// Adds a rule, or confirms an identical one. A different value under an
  /// existing active key means the environment is not deterministic.
  LearnResult insert(RewriteRule rule) {
    check_action(rule.action);
    if (rule.before.mask != rule.after.mask || rule.before.values.size() != rule.before.mask.size() ||
        rule.after.values.size() != rule.after.mask.size()) {
      throw Error("malformed rewrite rule");
    }
    if (!std::isfinite(rule.reward)) throw Error("rule reward must be finite");
    LearnResult result;
    if (const RewriteRule* existing = find(rule.action, rule.before)) {
      RewriteRule& slot = rules_[existing->ordinal];
      if (slot.after == rule.after && slot.reward == rule.reward && slot.identity == rule.identity) {
        return {LearnOutcome::kAlreadyKnown, slot.ordinal};
      }
      if (!(slot.identity && !is_active(slot))) {
        throw RuleConflictError("conflicting outcome for a known rule (action " + std::to_string(rule.action) +
                                ", rule #" + std::to_string(slot.ordinal) + ")");
      }
      slot.after = std::move(rule.after);
      slot.reward = rule.reward;
      slot.identity = rule.identity;
      result = {LearnOutcome::kReplacedStale, slot.ordinal};
      if (!slot.identity) widen_scope(slot.before.mask);
      return result;
    }
    rule.ordinal = rules_.size();
    auto& buckets = buckets_[static_cast<std::size_t>(rule.action)];
    auto bucket = std::find_if(buckets.begin(), buckets.end(), [&](const Bucket& b) { return b.mask == rule.before.mask; });
    if (bucket == buckets.end()) {
      Bucket fresh{rule.before.mask, {}, rule.ordinal};
      auto pos = std::find_if(buckets.begin(), buckets.end(), [&](const Bucket& b) {
        return b.mask.size() < fresh.mask.size();
      });
      bucket = buckets.insert(pos, std::move(fresh));
    }
    bucket->index.emplace(rule.before.values, rule.ordinal);
    result = {rule.identity ? LearnOutcome::kAddedIdentity : LearnOutcome::kAddedChange, rule.ordinal};
    const bool identity = rule.identity;
    CellMask mask = rule.before.mask;
    rules_.push_back(std::move(rule));
    if (!identity) widen_scope(mask);
    return result;
  }

  void mark_null(ActionId a) {
    check_action(a);
    null_[static_cast<std::size_t>(a)] = true;
  }

  bool operator==(const RuleSet& other) const {
    return game_ == other.game_ && rules_ == other.rules_ && vocab_ == other.vocab_ &&
           agent_group_ == other.agent_group_ && null_ == other.null_;
  }

 private:
  struct ValuesHash {
    std::size_t operator()(const std::vector<ObjectId>& v) const noexcept {
      std::uint64_t h = 1469598103934665603ULL;
      for (ObjectId x : v) {
        h ^= x;
        h *= 1099511628211ULL;
      }
      return static_cast<std::size_t>(h);
    }
  };

  struct Bucket {
    CellMask mask;
    std::unordered_map<std::vector<ObjectId>, std::size_t, ValuesHash> index;
    std::size_t first_ordinal = 0;
  };

  void check_action(ActionId a) const {
    if (a < 0 || a >= actions()) throw Error("invalid action id " + std::to_string(a));
  }

  // Once any change has been seen, "no change ever observed" stops being
  // evidence that an action is inert everywhere.
  void widen_scope(const CellMask& mask) {
    scope_ = scope_.united(mask);
    std::fill(null_.begin(), null_.end(), false);
  }

  GameKind game_;
  std::vector<RewriteRule> rules_;
  std::vector<std::vector<Bucket>> buckets_;
  std::vector<bool> null_;
  CellMask scope_;
  Vocabulary vocab_;
  std::vector<ObjectId> agent_group_;
};

/// Offsets, relative to `agent` in `s`, of every cell whose id differs.
inline CellMask diff_mask(const ObjectGrid& s, const ObjectGrid& s_next, Pos agent) {
  if (s.height() != s_next.height() || s.width() != s_next.width()) throw Error("diff_mask: dimension mismatch");
  std::vector<Offset> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.cells()[i] == s_next.cells()[i]) continue;
    const Pos p = s.pos_of(i);
    out.push_back({p.row - agent.row, p.col - agent.col});
  }
  return CellMask(std::move(out));
}

/// Records one observed transition.
///
/// A change is stored under the changed cells plus the agent's own cell. A
/// transition without change is explained by an identity rule over the
/// expectation scope; before any change has been observed the action is
/// just assumed to be inert.
inline LearnResult learn_rule(RuleSet& rules, const ObjectGrid& s, const ObjectGrid& s_next, ActionId action,
                              double reward, Pos agent) {
  if (!s.contains(agent)) throw Error("learn_rule: agent position outside the grid");
  const CellMask diff = diff_mask(s, s_next, agent);
  if (!diff.empty()) {
    const CellMask mask = diff.united(CellMask({{0, 0}}));
    return rules.insert({action, extract_pattern(s, agent, mask), extract_pattern(s_next, agent, mask), reward, false, 0});
  }
  if (rules.expectation_scope().empty()) {
    rules.mark_null(action);
    return {LearnOutcome::kAssumedNull, std::nullopt};
  }
  LocalPattern before = extract_pattern(s, agent, rules.expectation_scope());
  LocalPattern after = before;
  return rules.insert({action, std::move(before), std::move(after), reward, true, 0});
}

/// World-model step: stamps the first matching rule's after-pattern onto `s`.
inline Prediction apply(const RuleSet& rules, const ObjectGrid& s, ActionId action, Pos agent) {
  if (action < 0 || action >= rules.actions()) throw Error("invalid action id " + std::to_string(action));
  Prediction p;
  p.next_agent = agent;
  if (const RewriteRule* rule = rules.match(action, s, agent)) {
    ObjectGrid next = s;
    const auto& offsets = rule->after.mask.offsets();
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      const Pos cell = agent + offsets[i];
      if (next.contains(cell)) next[cell] = rule->after.values[i];
    }
    const auto& group = rules.agent_group();
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      const Pos cell = agent + offsets[i];
      if (next.contains(cell) && std::find(group.begin(), group.end(), next[cell]) != group.end()) {
        p.next_agent = cell;
        break;
      }
    }
    p.next_state = std::move(next);
    p.reward = rule->reward;
    p.status = PredictionStatus::kKnownRule;
    p.rule = rule->ordinal;
    return p;
  }
  if (rules.assumed_null(action)) {
    p.next_state = s;
    p.status = PredictionStatus::kKnownRule;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Rule-set file. Records are written in ordinal order, so two equal rule sets
// serialize to identical bytes.

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf, end);
}

inline double parse_double(const std::string& s) {
  double v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw FormatError("bad number '" + s + "'");
  return v;
}

inline std::string format_id(ObjectId v) { return v == kOutside ? "x" : std::to_string(v); }

inline ObjectId parse_id(const std::string& s) {
  if (s == "x") return kOutside;
  int v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || v < 0 || v >= kOutside) throw FormatError("bad id '" + s + "'");
  return static_cast<ObjectId>(v);
}

inline std::string expect_line(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("unexpected end of rule file");
  return line;
}

template <typename T>
T read_field(std::istringstream& in, const char* what) {
  T v{};
  if (!(in >> v)) throw FormatError(std::string("malformed field: ") + what);
  return v;
}

}  // namespace detail

inline constexpr int kRuleFormatVersion = 1;

inline void write_vocabulary_block(std::ostream& out, const Vocabulary& vocab, const std::vector<ObjectId>& agents) {
  out << "vocab " << vocab.size() << '\n';
  vocab.dump(out);
  out << "agents " << agents.size();
  for (ObjectId a : agents) out << ' ' << a;
  out << '\n';
}

inline std::pair<Vocabulary, std::vector<ObjectId>> read_vocabulary_block(std::istream& in, const std::string& hash) {
  Vocabulary vocab;
  std::istringstream head(detail::expect_line(in));
  if (detail::read_field<std::string>(head, "vocab") != "vocab") throw FormatError("expected vocab block");
  const auto n = detail::read_field<std::size_t>(head, "vocab size");
  for (std::size_t i = 0; i < n; ++i) {
    std::istringstream line(detail::expect_line(in));
    const auto id = detail::read_field<std::size_t>(line, "vocab id");
    VocabularyEntry e;
    e.digest = detail::read_field<std::string>(line, "digest");
    e.width = detail::read_field<int>(line, "tile width");
    e.height = detail::read_field<int>(line, "tile height");
    if (id != i) throw FormatError("vocabulary ids must be dense");
    vocab.add(std::move(e));
  }
  if (vocab.hash() != hash) throw FormatError("vocabulary hash mismatch");
  std::istringstream agents_line(detail::expect_line(in));
  if (detail::read_field<std::string>(agents_line, "agents") != "agents") throw FormatError("expected agents line");
  const auto k = detail::read_field<std::size_t>(agents_line, "agent count");
  std::vector<ObjectId> agents;
  for (std::size_t i = 0; i < k; ++i) {
    const auto id = detail::read_field<std::size_t>(agents_line, "agent id");
    if (id >= vocab.size()) throw FormatError("agent id outside vocabulary");
    agents.push_back(static_cast<ObjectId>(id));
  }
  return {std::move(vocab), std::move(agents)};
}

inline void save_rules(std::ostream& out, const RuleSet& rules) {
  out << "vrr-rules " << kRuleFormatVersion << '\n';
  out << "game " << game_name(rules.game()) << '\n';
  out << "vocab_hash " << rules.vocabulary().hash() << '\n';
  write_vocabulary_block(out, rules.vocabulary(), rules.agent_group());
  out << "null";
  for (ActionId a = 0; a < rules.actions(); ++a) {
    if (rules.assumed_null(a)) out << ' ' << a;
  }
  out << '\n';
  out << "rules " << rules.size() << '\n';
  for (const RewriteRule& r : rules.rules()) {
    out << r.ordinal << ' ' << r.action << ' ' << (r.identity ? 'i' : 'c') << ' ' << detail::format_double(r.reward)
        << ' ' << r.before.mask.size();
    for (Offset o : r.before.mask) out << ' ' << o.drow << ':' << o.dcol;
    out << " |";
    for (ObjectId v : r.before.values) out << ' ' << detail::format_id(v);
    out << " |";
    for (ObjectId v : r.after.values) out << ' ' << detail::format_id(v);
    out << '\n';
  }
}

inline std::string rules_to_string(const RuleSet& rules) {
  std::ostringstream out;
  save_rules(out, rules);
  return out.str();
}

/// Parses a rule-set file. When `expected_vocab_hash` is given the file's
/// vocabulary must match it.
inline RuleSet load_rules(std::istream& in, const std::string* expected_vocab_hash = nullptr) {
  using detail::expect_line;
  using detail::read_field;
  std::istringstream magic(expect_line(in));
  if (read_field<std::string>(magic, "magic") != "vrr-rules") throw FormatError("not a rule-set file");
  if (read_field<int>(magic, "version") != kRuleFormatVersion) throw FormatError("unsupported rule-set version");
  std::istringstream game_line(expect_line(in));
  read_field<std::string>(game_line, "game");
  RuleSet rules(parse_game(read_field<std::string>(game_line, "game kind")));
  std::istringstream hash_line(expect_line(in));
  read_field<std::string>(hash_line, "vocab_hash");
  const auto hash = read_field<std::string>(hash_line, "vocab hash");
  if (expected_vocab_hash != nullptr && *expected_vocab_hash != hash) throw FormatError("vocabulary hash mismatch");
  auto [vocab, agents] = read_vocabulary_block(in, hash);
  rules.vocabulary() = std::move(vocab);
  rules.agent_group() = std::move(agents);

  std::istringstream null_line(expect_line(in));
  if (read_field<std::string>(null_line, "null") != "null") throw FormatError("expected null line");
  std::vector<ActionId> null_actions;
  for (ActionId a = 0; null_line >> a;) null_actions.push_back(a);

  std::istringstream count_line(expect_line(in));
  if (read_field<std::string>(count_line, "rules") != "rules") throw FormatError("expected rules line");
  const auto n = read_field<std::size_t>(count_line, "rule count");
  for (std::size_t i = 0; i < n; ++i) {
    std::istringstream line(expect_line(in));
    RewriteRule r;
    r.ordinal = read_field<std::size_t>(line, "ordinal");
    r.action = read_field<int>(line, "action");
    const auto kind = read_field<std::string>(line, "kind");
    if (kind != "c" && kind != "i") throw FormatError("bad rule kind");
    r.identity = kind == "i";
    r.reward = detail::parse_double(read_field<std::string>(line, "reward"));
    const auto m = read_field<std::size_t>(line, "mask size");
    std::vector<Offset> offsets;
    for (std::size_t k = 0; k < m; ++k) {
      const auto tok = read_field<std::string>(line, "offset");
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw FormatError("bad offset");
      offsets.push_back({std::stoi(tok.substr(0, colon)), std::stoi(tok.substr(colon + 1))});
    }
    CellMask mask(offsets);
    if (mask.size() != m || mask.offsets() != offsets) throw FormatError("offsets must be sorted and unique");
    if (read_field<std::string>(line, "separator") != "|") throw FormatError("expected '|'");
    r.before.mask = r.after.mask = mask;
    for (std::size_t k = 0; k < m; ++k) r.before.values.push_back(detail::parse_id(read_field<std::string>(line, "value")));
    if (read_field<std::string>(line, "separator") != "|") throw FormatError("expected '|'");
    for (std::size_t k = 0; k < m; ++k) r.after.values.push_back(detail::parse_id(read_field<std::string>(line, "value")));
    if (r.ordinal != i) throw FormatError("rule ordinals must be dense and ordered");
    const LearnResult res = rules.insert(std::move(r));
    if (!res.added()) throw FormatError("duplicate rule key");
  }
  for (ActionId a : null_actions) rules.mark_null(a);
  return rules;
}

inline RuleSet rules_from_string(const std::string& text, const std::string* expected_vocab_hash = nullptr) {
  std::istringstream in(text);
  return load_rules(in, expected_vocab_hash);
}

/// Human-readable dump: each rule as a pair of small before/after grids.
inline void dump_rules(std::ostream& out, const RuleSet& rules, bool include_inactive = false) {
  auto glyph = [](ObjectId v) -> char {
    if (v == kOutside) return 'x';
    constexpr std::string_view kDigits = "0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";
    return v < kDigits.size() ? kDigits[v] : '?';
  };
  out << "# " << rules.size() << " rules, " << rules.active_count() << " active; agent sprites:";
  for (ObjectId a : rules.agent_group()) out << ' ' << glyph(a);
  out << '\n';
  for (const RewriteRule& r : rules.rules()) {
    if (!include_inactive && !rules.is_active(r)) continue;
    out << "#" << r.ordinal << "  " << action_name(rules.game(), r.action) << "  reward "
        << detail::format_double(r.reward) << (r.identity ? "  (no change)" : "") << '\n';
    int r0 = 0, r1 = 0, c0 = 0, c1 = 0;
    for (Offset o : r.before.mask) {
      r0 = std::min(r0, o.drow), r1 = std::max(r1, o.drow);
      c0 = std::min(c0, o.dcol), c1 = std::max(c1, o.dcol);
    }
    for (int dr = r0; dr <= r1; ++dr) {
      std::string left, right;
      for (int dc = c0; dc <= c1; ++dc) {
        const auto& offs = r.before.mask.offsets();
        auto it = std::lower_bound(offs.begin(), offs.end(), Offset{dr, dc});
        if (it != offs.end() && *it == Offset{dr, dc}) {
          const auto k = static_cast<std::size_t>(it - offs.begin());
          left.push_back(glyph(r.before.values[k]));
          right.push_back(glyph(r.after.values[k]));
        } else {
          left.push_back('.');
          right.push_back('.');
        }
      }
      out << "  " << left << "  ->  " << right << '\n';
    }
  }
}

}  // namespace vrr
