#include "hierg/features.hpp"

#include <array>
#include <cstdlib>

namespace hierg::features {

namespace {

constexpr std::array<Subgoal, 4> kWalls = {Subgoal::North, Subgoal::South, Subgoal::West,
                                           Subgoal::East};

int goal_slot(const MazeSpec& spec, Room r) {
  const Cell g = spec.goal();
  if (maze::room_of(g) != r) return 0;
  return (g.row - r.row * maze::kRoomPitch - 1) * 3 + (g.col - r.col * maze::kRoomPitch - 1);
}

struct Ranked {
  std::array<int, 4> rank{};
  std::array<int, 4> slot{};
};

Ranked rank_walls(const MazeView& view, Room room, Cell agent) {
  std::array<int, 4> length{};
  Ranked out;
  for (int d = 0; d < 4; ++d) {
    const auto exit = view.best_exit(room, kWalls[d], agent);
    length[d] = exit.length;
    out.slot[d] = exit.slot;
  }
  for (int d = 0; d < 4; ++d) {
    if (length[d] < 0) {
      out.rank[d] = kNoDoorRank;
      continue;
    }
    int rank = 0;
    for (int e = 0; e < 4; ++e) {
      if (e == d || length[e] < 0) continue;
      if (length[e] < length[d] || (length[e] == length[d] && e < d)) ++rank;
    }
    out.rank[d] = rank;
  }
  return out;
}

}  // namespace

MazeView::MazeView(const MazeSpec& spec) : spec_(spec), dist_(maze::bfs_distances(spec, spec.goal())) {}

MazeView::Exit MazeView::best_exit(Room r, Subgoal g, Cell from) const {
  Exit best;
  if (!maze::neighbor(r, g)) return best;
  const auto cells = maze::wall_cells(r, g);
  for (int slot = 0; slot < maze::kRoomInterior; ++slot) {
    const Cell c = cells[slot];
    if (spec_.kind(c) != maze::CellKind::Door || dist_[c.index()] < 0) continue;
    const int len = std::abs(c.row - from.row) + std::abs(c.col - from.col) + dist_[c.index()];
    if (best.length < 0 || len < best.length) best = {len, slot};
  }
  return best;
}

Features hi_features(const MazeView& view, const MazeState& s) {
  const Ranked r = rank_walls(view, s.room, s.agent);
  Features f;
  for (int d = 0; d < 4; ++d) f.push_back(static_cast<std::uint32_t>(d * 5 + r.rank[d]));
  f.push_back(20 + (view.spec().goal_room() == s.room ? 1 : 0));
  return f;
}

Features lo_features(const MazeView& view, const MazeState& entry, const MazeState& s, Subgoal g) {
  const int pos = maze::local_position(entry.room, s.agent);
  int detail = 0;
  if (g == Subgoal::GoToTarget) {
    detail = goal_slot(view.spec(), entry.room);
  } else {
    detail = view.best_exit(entry.room, g, s.agent).slot;
  }
  return {static_cast<std::uint32_t>(pos * 9 + detail)};
}

Features flat_features(const MazeView& view, const MazeState& s) {
  const Ranked r = rank_walls(view, s.room, s.agent);
  const int pos = maze::local_position(s.room, s.agent);
  Features f;
  for (int d = 0; d < 4; ++d) {
    if (r.rank[d] == kNoDoorRank) continue;
    f.push_back(static_cast<std::uint32_t>(((d * 4 + r.rank[d]) * maze::kLocalPositions + pos) * 3 +
                                           r.slot[d]));
  }
  if (view.spec().goal_room() == s.room)
    f.push_back(static_cast<std::uint32_t>(4 * 4 * kFlatSituations + pos * 9 +
                                           goal_slot(view.spec(), s.room)));
  return f;
}

std::uint64_t hi_key(const MazeView& view, const MazeState& s) {
  const Features f = hi_features(view, s);
  std::uint64_t key = 0;
  for (int d = 0; d < 4; ++d) key = key * 5 + (f[d] - d * 5);
  return key * 2 + (f[4] - 20);
}

}  // namespace hierg::features
