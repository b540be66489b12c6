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

// Line-delimited transition log shared by training replays, scripted and
// human demonstrations, and the session server's recorder.
//
//   vrr-trajectory 1
//   game <kind> size <width> <height> vocab_hash <sha256>
//   vocab <n>                      (n lines: id  sha256  width  height)
//   agents <k> <ids...>
//   episode step action_id reward done agent_row agent_col grid_rle(s) grid_rle(s')   (tab separated)
//
// grid_rle is row-major `id:count` runs joined by commas.

#pragma once

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "vrr/rules.hpp"

namespace vrr {

struct TrajectoryRecord {
  int episode = 0;
  int step = 0;
  ActionId action = 0;
  double reward = 0.0;
  bool done = false;
  Pos agent;
  ObjectGrid before;
  ObjectGrid after;

  bool operator==(const TrajectoryRecord&) const = default;
};

inline std::string encode_rle(const ObjectGrid& grid) {
  std::string out;
  const auto cells = grid.cells();
  for (std::size_t i = 0; i < cells.size();) {
    std::size_t j = i;
    while (j < cells.size() && cells[j] == cells[i]) ++j;
    if (!out.empty()) out.push_back(',');
    out += std::to_string(cells[i]) + ':' + std::to_string(j - i);
    i = j;
  }
  return out;
}

inline ObjectGrid decode_rle(std::string_view text, int height, int width) {
  ObjectGrid grid(height, width);
  std::size_t filled = 0;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view run = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    const auto colon = run.find(':');
    if (colon == std::string_view::npos) throw FormatError("malformed rle run");
    unsigned id = 0;
    std::size_t count = 0;
    auto r1 = std::from_chars(run.data(), run.data() + colon, id);
    auto r2 = std::from_chars(run.data() + colon + 1, run.data() + run.size(), count);
    if (r1.ec != std::errc() || r2.ec != std::errc() || r2.ptr != run.data() + run.size() || id >= kOutside ||
        count == 0 || filled + count > grid.size()) {
      throw FormatError("malformed rle run");
    }
    for (std::size_t k = 0; k < count; ++k) grid.cells()[filled++] = static_cast<ObjectId>(id);
  }
  if (filled != grid.size()) throw FormatError("rle does not cover the grid");
  return grid;
}

struct TrajectoryLog {
  GameKind game = GameKind::kSokoban;
  int width = 0;
  int height = 0;
  Vocabulary vocab;
  std::vector<ObjectId> agents;
  std::vector<TrajectoryRecord> records;

  bool operator==(const TrajectoryLog&) const = default;
};

inline void write_trajectory(std::ostream& out, const TrajectoryLog& log) {
  out << "vrr-trajectory 1\n";
  out << "game " << game_name(log.game) << " size " << log.width << ' ' << log.height << " vocab_hash "
      << log.vocab.hash() << '\n';
  write_vocabulary_block(out, log.vocab, log.agents);
  for (const TrajectoryRecord& r : log.records) {
    if (r.before.width() != log.width || r.before.height() != log.height || r.after.width() != log.width ||
        r.after.height() != log.height) {
      throw FormatError("record grid does not match the log's board size");
    }
    out << r.episode << '\t' << r.step << '\t' << r.action << '\t' << detail::format_double(r.reward) << '\t'
        << (r.done ? 1 : 0) << '\t' << r.agent.row << '\t' << r.agent.col << '\t' << encode_rle(r.before) << '\t'
        << encode_rle(r.after) << '\n';
  }
}

inline std::string trajectory_to_string(const TrajectoryLog& log) {
  std::ostringstream out;
  write_trajectory(out, log);
  return out.str();
}

inline TrajectoryLog read_trajectory(std::istream& in) {
  using detail::expect_line;
  using detail::read_field;
  TrajectoryLog log;
  std::istringstream magic(expect_line(in));
  if (read_field<std::string>(magic, "magic") != "vrr-trajectory" || read_field<int>(magic, "version") != 1) {
    throw FormatError("not a trajectory log");
  }
  std::istringstream head(expect_line(in));
  if (read_field<std::string>(head, "game") != "game") throw FormatError("expected game header");
  log.game = parse_game(read_field<std::string>(head, "game kind"));
  if (read_field<std::string>(head, "size") != "size") throw FormatError("expected size");
  log.width = read_field<int>(head, "width");
  log.height = read_field<int>(head, "height");
  if (read_field<std::string>(head, "vocab_hash") != "vocab_hash") throw FormatError("expected vocab_hash");
  const auto hash = read_field<std::string>(head, "vocab hash");
  if (log.width < 1 || log.height < 1) throw FormatError("bad board size");
  auto [vocab, agents] = read_vocabulary_block(in, hash);
  log.vocab = std::move(vocab);
  log.agents = std::move(agents);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t tab = line.find('\t'); ; tab = line.find('\t', start)) {
      f.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (f.size() != 9) throw FormatError("trajectory record must have 9 fields");
    TrajectoryRecord r;
    try {
      r.episode = std::stoi(f[0]);
      r.step = std::stoi(f[1]);
      r.action = std::stoi(f[2]);
      r.reward = detail::parse_double(f[3]);
      r.done = f[4] == "1";
      r.agent = {std::stoi(f[5]), std::stoi(f[6])};
    } catch (const std::logic_error&) {
      throw FormatError("malformed trajectory record");
    }
    if (r.action < 0 || r.action >= action_count(log.game)) throw FormatError("record action out of range");
    r.before = decode_rle(f[7], log.height, log.width);
    r.after = decode_rle(f[8], log.height, log.width);
    log.records.push_back(std::move(r));
  }
  return log;
}

inline TrajectoryLog trajectory_from_string(const std::string& text) {
  std::istringstream in(text);
  return read_trajectory(in);
}

}  // namespace vrr
