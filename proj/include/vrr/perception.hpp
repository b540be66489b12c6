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

// Pixels to object grids: sprite cell-size inference, tile vocabulary,
// tokenization and agent identification.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "vrr/grid.hpp"
#include "vrr/image.hpp"
#include "vrr/sha256.hpp"

namespace vrr {

class PerceptionError : public Error {
 public:
  using Error::Error;
};

struct VocabularyEntry {
  std::string digest;  // sha256 of the tile's RGB bytes
  int width = 0;
  int height = 0;

  bool operator==(const VocabularyEntry&) const = default;
};

/// Bijection between distinct sprite tiles and dense object ids, assigned in
/// first-seen order.
class Vocabulary {
 public:
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
  [[nodiscard]] const std::vector<VocabularyEntry>& entries() const noexcept { return entries_; }
  [[nodiscard]] const VocabularyEntry& entry(ObjectId id) const { return entries_.at(id); }

  ObjectId lookup_or_add(std::string_view tile_bytes, int width, int height) {
    if (auto it = by_bytes_.find(std::string(tile_bytes)); it != by_bytes_.end()) return it->second;
    const std::string digest =
        sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(tile_bytes.data()), tile_bytes.size()));
    ObjectId id = 0;
    if (auto it = by_digest_.find(digest); it != by_digest_.end()) {
      id = it->second;
    } else {
      id = add({digest, width, height});
    }
    by_bytes_.emplace(tile_bytes, id);
    bitmaps_[id] = std::string(tile_bytes);
    return id;
  }

  /// Id of the tile turned clockwise by `quarter_turns`, adding it if it was
  /// never seen. Empty when the tile's pixels are unknown (entries loaded
  /// from a file carry digests only) or the tile is not square.
  std::optional<ObjectId> rotated(ObjectId id, int quarter_turns) {
    const VocabularyEntry& e = entry(id);
    const std::string& src = bitmaps_.at(id);
    if (src.empty() || e.width != e.height) return std::nullopt;
    const int n = e.width;
    std::string cur = src;
    for (int q = ((quarter_turns % 4) + 4) % 4; q > 0; --q) {
      std::string next(cur.size(), '\0');
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
          const auto from = static_cast<std::size_t>(y * n + x) * 3;
          const auto to = static_cast<std::size_t>(x * n + (n - 1 - y)) * 3;
          next.replace(to, 3, cur, from, 3);
        }
      }
      cur = std::move(next);
    }
    return lookup_or_add(cur, n, n);
  }

  ObjectId add(VocabularyEntry entry) {
    if (entries_.size() >= kOutside) throw PerceptionError("vocabulary full");
    if (by_digest_.contains(entry.digest)) throw PerceptionError("duplicate vocabulary digest");
    const auto id = static_cast<ObjectId>(entries_.size());
    by_digest_.emplace(entry.digest, id);
    entries_.push_back(std::move(entry));
    bitmaps_.emplace_back();
    return id;
  }

  [[nodiscard]] std::optional<ObjectId> find(std::string_view digest) const {
    if (auto it = by_digest_.find(std::string(digest)); it != by_digest_.end()) return it->second;
    return std::nullopt;
  }

  /// One line per id: `id  sha256  width  height`.
  void dump(std::ostream& out) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      out << i << "  " << entries_[i].digest << "  " << entries_[i].width << "  " << entries_[i].height << '\n';
    }
  }

  [[nodiscard]] std::string hash() const {
    std::ostringstream out;
    dump(out);
    return sha256_hex(out.str());
  }

  bool operator==(const Vocabulary& other) const { return entries_ == other.entries_; }

 private:
  std::vector<VocabularyEntry> entries_;
  std::unordered_map<std::string, ObjectId> by_bytes_;
  std::unordered_map<std::string, ObjectId> by_digest_;
  std::vector<std::string> bitmaps_;
};

namespace detail {

inline std::string tile_bytes(const PixelImage& img, int x0, int y0, int w, int h) {
  std::string bytes;
  bytes.resize(static_cast<std::size_t>(w) * h * 3);
  auto* dst = bytes.data();
  for (int y = 0; y < h; ++y) {
    const auto* src = img.pixel(x0, y0 + y);
    std::copy(src, src + static_cast<std::ptrdiff_t>(w) * 3, dst);
    dst += static_cast<std::ptrdiff_t>(w) * 3;
  }
  return bytes;
}

}  // namespace detail

/// Number of distinct cell x cell tiles pooled over `images`, slicing from
/// pixel offset (`offset_x`, `offset_y`). Partial tiles at the borders are
/// dropped.
inline std::size_t count_tile_types(std::span<const PixelImage> images, int cell, int offset_x = 0,
                                    int offset_y = 0) {
  std::unordered_set<std::string> seen;
  for (const PixelImage& img : images) {
    for (int y = offset_y; y + cell <= img.height; y += cell) {
      for (int x = offset_x; x + cell <= img.width; x += cell) seen.insert(detail::tile_bytes(img, x, y, cell, cell));
    }
  }
  return seen.size();
}

/// Picks the sprite cell size among divisors (>= 4) of both image
/// dimensions. Counting tile types alone always favours huge tiles on a
/// handful of frames (each whole frame is one "type"), so each size is scored
/// by the bytes needed to describe the frames with it: the tile bitmaps plus
/// one index per cell. If some size explains everything with a single tile
/// type, the largest such size wins.
inline int infer_cell_size(std::span<const PixelImage> images) {
  if (images.empty()) throw PerceptionError("infer_cell_size needs at least one image");
  const int w = images.front().width;
  const int h = images.front().height;
  for (const auto& img : images) {
    if (img.width != w || img.height != h) throw PerceptionError("images differ in size");
  }
  int best = 0;
  double best_cost = 0.0;
  for (int c = 4; c <= std::min(w, h); ++c) {
    if (w % c != 0 || h % c != 0) continue;
    const std::size_t types = count_tile_types(images, c);
    const double cells = static_cast<double>(w / c) * static_cast<double>(h / c) * static_cast<double>(images.size());
    const double index_bits = types <= 1 ? 0.0 : std::ceil(std::log2(static_cast<double>(types)));
    const double cost = types <= 1 ? -static_cast<double>(c)
                                   : static_cast<double>(types) * c * c * 3.0 + cells * index_bits / 8.0;
    if (best == 0 || cost < best_cost || (cost == best_cost && c > best)) {
      best = c;
      best_cost = cost;
    }
  }
  if (best == 0) throw PerceptionError("image too small: no cell size >= 4 divides both dimensions");
  return best;
}

/// Slices `image` into cell x cell tiles and maps each to an object id,
/// extending `vocab` on first sight.
inline ObjectGrid tokenize(const PixelImage& image, int cell_size, Vocabulary& vocab) {
  if (cell_size < 1 || image.width % cell_size != 0 || image.height % cell_size != 0) {
    throw PerceptionError("cell size does not divide the image");
  }
  ObjectGrid grid(image.height / cell_size, image.width / cell_size);
  for (int r = 0; r < grid.height(); ++r) {
    for (int c = 0; c < grid.width(); ++c) {
      grid[{r, c}] = vocab.lookup_or_add(detail::tile_bytes(image, c * cell_size, r * cell_size, cell_size, cell_size),
                                         cell_size, cell_size);
    }
  }
  return grid;
}

using Transition = std::pair<ObjectGrid, ObjectGrid>;

/// The controllable entity. Several sprites can stand for the agent (facing,
/// carried items, standing on a target); they never share a frame.
struct AgentIdentity {
  ObjectId agent_id = 0;
  std::vector<ObjectId> group;

  bool operator==(const AgentIdentity&) const = default;
};

/// Finds the object that shows up in the changed region of (nearly) every
/// transition with a non-empty difference.
///
/// Sprites that occur at most once per frame and never share a frame are
/// first merged into groups, so that an agent drawn with several sprites is
/// one identity. Groups present in the most changed regions qualify, provided
/// that is a strict majority; among them the one whose positions change in
/// most transitions wins, then the earliest to appear in the stream. All
/// tie-breaks depend on the observation stream only, never on id values.
inline AgentIdentity identify_agent(std::span<const Transition> transitions) {
  std::size_t max_id = 0;
  for (const auto& [s, s2] : transitions) {
    if (s.height() != s2.height() || s.width() != s2.width()) throw PerceptionError("transition dimension mismatch");
    for (ObjectId v : s.cells()) max_id = std::max<std::size_t>(max_id, v);
    for (ObjectId v : s2.cells()) max_id = std::max<std::size_t>(max_id, v);
  }
  const std::size_t n = max_id + 1;
  std::vector<int> max_count(n, 0);
  std::vector<int> changed_in(n, 0);
  std::vector<std::pair<std::size_t, std::size_t>> first_seen(n, {SIZE_MAX, SIZE_MAX});
  std::vector<std::vector<bool>> together(n, std::vector<bool>(n, false));
  std::vector<std::vector<bool>> present_in_change;  // per non-empty transition

  std::size_t frame_index = 0;
  auto scan_frame = [&](const ObjectGrid& g) {
    std::vector<int> counts(n, 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const ObjectId v = g.cells()[i];
      if (++counts[v] == 1 && first_seen[v].first == SIZE_MAX) first_seen[v] = {frame_index, i};
    }
    std::vector<std::size_t> present;
    for (std::size_t id = 0; id < n; ++id) {
      if (counts[id] > 0) present.push_back(id);
      max_count[id] = std::max(max_count[id], counts[id]);
    }
    for (std::size_t a : present) {
      for (std::size_t b : present) together[a][b] = true;
    }
    ++frame_index;
  };

  for (const auto& [s, s2] : transitions) {
    scan_frame(s);
    scan_frame(s2);
    if (s == s2) continue;
    std::vector<bool> present(n, false);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.cells()[i] != s2.cells()[i]) present[s.cells()[i]] = present[s2.cells()[i]] = true;
    }
    for (std::size_t id = 0; id < n; ++id) changed_in[id] += present[id] ? 1 : 0;
    present_in_change.push_back(std::move(present));
  }
  if (present_in_change.empty()) throw PerceptionError("agent identification failed: no transition changed the state");

  std::vector<std::size_t> candidates;
  for (std::size_t id = 0; id < n; ++id) {
    if (max_count[id] == 1 && changed_in[id] > 0) candidates.push_back(id);
  }
  std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    if (changed_in[a] != changed_in[b]) return changed_in[a] > changed_in[b];
    return first_seen[a] < first_seen[b];
  });
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t id : candidates) {
    bool placed = false;
    for (auto& g : groups) {
      if (std::none_of(g.begin(), g.end(), [&](std::size_t m) { return together[id][m]; })) {
        g.push_back(id);
        placed = true;
        break;
      }
    }
    if (!placed) groups.push_back({id});
  }

  auto positions = [](const ObjectGrid& g, const std::vector<std::size_t>& members) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::find(members.begin(), members.end(), g.cells()[i]) != members.end()) out.push_back(i);
    }
    return out;
  };

  // Coverage: in how many changed regions some member appears. Not every
  // change touches the agent (a door opening in front of it), so the best
  // coverage wins as long as it is a strict majority.
  std::vector<std::size_t> coverage;
  for (const auto& g : groups) {
    coverage.push_back(static_cast<std::size_t>(
        std::count_if(present_in_change.begin(), present_in_change.end(), [&](const auto& present) {
          return std::any_of(g.begin(), g.end(), [&](std::size_t m) { return present[m]; });
        })));
  }
  const std::size_t top = coverage.empty() ? 0 : *std::max_element(coverage.begin(), coverage.end());
  if (2 * top <= present_in_change.size()) {
    throw PerceptionError("agent identification failed: no object is present in most changes");
  }
  const std::vector<std::size_t>* best = nullptr;
  int best_moves = -1;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    if (coverage[gi] != top) continue;
    int moves = 0;
    for (const auto& [s, s2] : transitions) moves += positions(s, g) != positions(s2, g) ? 1 : 0;
    if (moves > best_moves || (moves == best_moves && first_seen[g.front()] < first_seen[best->front()])) {
      best = &g;
      best_moves = moves;
    }
  }

  AgentIdentity identity;
  identity.agent_id = static_cast<ObjectId>(best->front());
  for (std::size_t id : *best) identity.group.push_back(static_cast<ObjectId>(id));
  std::sort(identity.group.begin(), identity.group.end());
  return identity;
}

struct AgentLocation {
  Pos pos;
  ObjectId sprite = 0;  // which member of the agent group (encodes facing)
};

inline AgentLocation locate_agent(const ObjectGrid& grid, std::span<const ObjectId> agent_group) {
  std::optional<AgentLocation> found;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const ObjectId v = grid.cells()[i];
    if (std::find(agent_group.begin(), agent_group.end(), v) == agent_group.end()) continue;
    if (found) throw PerceptionError("multiple agent cells");
    found = AgentLocation{grid.pos_of(i), v};
  }
  if (!found) throw PerceptionError("no agent cell");
  return *found;
}

inline AgentLocation locate_agent(const ObjectGrid& grid, ObjectId agent_id) {
  const ObjectId group[] = {agent_id};
  return locate_agent(grid, group);
}

/// When a frame shows no known agent sprite, adopts the single sprite that
/// is new to the vocabulary (id >= `first_new_id`), occurs once, and sits in
/// a cell that changed since `previous` without occurring anywhere in it.
/// Returns whether the group changed.
inline bool extend_agent_group(const ObjectGrid& grid, const ObjectGrid& previous, ObjectId first_new_id,
                               std::vector<ObjectId>& group) {
  for (ObjectId v : grid.cells()) {
    if (std::find(group.begin(), group.end(), v) != group.end()) return false;
  }
  std::map<ObjectId, int> counts;
  for (ObjectId v : grid.cells()) ++counts[v];
  std::optional<ObjectId> pick;
  const bool comparable = previous.height() == grid.height() && previous.width() == grid.width();
  const std::set<ObjectId> before = comparable ? std::set<ObjectId>(previous.cells().begin(), previous.cells().end())
                                               : std::set<ObjectId>{};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const ObjectId v = grid.cells()[i];
    if (v < first_new_id || counts[v] != 1 || before.contains(v)) continue;
    if (pick && *pick != v) return false;
    pick = v;
  }
  if (!pick) return false;
  group.push_back(*pick);
  std::sort(group.begin(), group.end());
  return true;
}

/// Adds sprites that only ever occur, once, in frames where no known agent
/// sprite is visible. Those frames must show the agent somehow, and a sprite
/// that never shares a frame with the known agent sprites is the only
/// candidate. Returns the number of sprites added.
inline std::size_t complete_agent_group(std::span<const ObjectGrid> frames, std::vector<ObjectId>& group) {
  std::size_t added = 0;
  for (bool changed = true; changed;) {
    changed = false;
    auto in_group = [&group](ObjectId v) { return std::find(group.begin(), group.end(), v) != group.end(); };
    std::set<ObjectId> beside_agent;
    std::vector<const ObjectGrid*> orphans;
    for (const ObjectGrid& f : frames) {
      if (std::any_of(f.cells().begin(), f.cells().end(), in_group)) {
        beside_agent.insert(f.cells().begin(), f.cells().end());
      } else {
        orphans.push_back(&f);
      }
    }
    for (const ObjectGrid* f : orphans) {
      std::map<ObjectId, int> counts;
      for (ObjectId v : f->cells()) ++counts[v];
      std::optional<ObjectId> pick;
      bool ambiguous = false;
      for (auto [v, n] : counts) {
        if (n != 1 || beside_agent.contains(v)) continue;
        ambiguous = pick.has_value();
        pick = v;
      }
      if (pick && !ambiguous && !in_group(*pick)) {
        group.push_back(*pick);
        std::sort(group.begin(), group.end());
        ++added;
        changed = true;
        break;
      }
    }
  }
  return added;
}

}  // namespace vrr
