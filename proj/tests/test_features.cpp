#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include "doctest.h"
#include "hierg/features.hpp"
#include "maze_fixtures.hpp"

using namespace hierg;
using namespace hierg::features;
using maze::CellKind;

namespace {

std::vector<int> distances_to(const MazeSpec& spec, Cell target) {
  std::vector<int> d(maze::kCells, -1);
  std::deque<Cell> q{target};
  d[target.index()] = 0;
  while (!q.empty()) {
    const Cell c = q.front();
    q.pop_front();
    for (auto [dr, dc] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
      const Cell n{c.row + dr, c.col + dc};
      if (n.row < 0 || n.col < 0 || n.row >= maze::kSize || n.col >= maze::kSize) continue;
      if (spec.kind(n) == CellKind::Lava || d[n.index()] >= 0) continue;
      d[n.index()] = d[c.index()] + 1;
      q.push_back(n);
    }
  }
  return d;
}

// Door cells on wall g of room r, by slot; empty when the wall is the border.
std::vector<std::pair<int, Cell>> doors(const MazeSpec& spec, Room r, Subgoal g) {
  const int top = r.row * 4, left = r.col * 4;
  std::vector<std::pair<int, Cell>> out;
  if ((g == Subgoal::North && r.row == 0) || (g == Subgoal::South && r.row == 3) ||
      (g == Subgoal::West && r.col == 0) || (g == Subgoal::East && r.col == 3))
    return out;
  for (int k = 0; k < 3; ++k) {
    Cell c;
    switch (g) {
      case Subgoal::North: c = {top, left + 1 + k}; break;
      case Subgoal::South: c = {top + 4, left + 1 + k}; break;
      case Subgoal::West: c = {top + 1 + k, left}; break;
      default: c = {top + 1 + k, left + 4}; break;
    }
    if (spec.kind(c) == CellKind::Door) out.push_back({k, c});
  }
  return out;
}

struct Route {
  int length = -1;
  int slot = 0;
};

Route route(const MazeSpec& spec, const std::vector<int>& dist, Room r, Subgoal g, Cell from) {
  Route best;
  for (auto [slot, c] : doors(spec, r, g)) {
    if (dist[c.index()] < 0) continue;
    const int len = std::abs(c.row - from.row) + std::abs(c.col - from.col) + dist[c.index()];
    if (best.length < 0 || len < best.length) best = {len, slot};
  }
  return best;
}

MazeState at(Cell c) {
  MazeState s;
  s.agent = c;
  s.room = *maze::room_of(c);
  return s;
}

}  // namespace

TEST_CASE("exit routes match a direct door scan") {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const MazeSpec spec = maze::generate_maze(seed);
    const MazeView view(spec);
    const auto dist = distances_to(spec, spec.goal());
    for (int i = 0; i < maze::kCells; ++i) {
      const Cell c = Cell::from_index(i);
      if (!maze::room_of(c)) continue;
      const Room r = *maze::room_of(c);
      CHECK(view.goal_distance(c) == dist[i]);
      for (Subgoal g : {Subgoal::North, Subgoal::South, Subgoal::West, Subgoal::East}) {
        const auto want = route(spec, dist, r, g, c);
        const auto got = view.best_exit(r, g, c);
        CHECK(got.length == want.length);
        if (want.length >= 0) CHECK(got.slot == want.slot);
      }
    }
  }
}

TEST_CASE("HI features rank the walls with doors and mark the rest") {
  for (std::uint64_t seed = 20; seed < 30; ++seed) {
    const MazeSpec spec = maze::generate_maze(seed);
    const MazeView view(spec);
    const auto dist = distances_to(spec, spec.goal());
    for (int i = 0; i < maze::kCells; ++i) {
      const Cell c = Cell::from_index(i);
      if (!maze::room_of(c) || spec.kind(c) == CellKind::Lava) continue;
      const MazeState s = at(c);
      const Features f = hi_features(view, s);
      REQUIRE(f.size() == 5);
      std::vector<int> ranks;
      std::vector<std::pair<int, int>> routed;  // (length, wall)
      for (int d = 0; d < 4; ++d) {
        const auto r = route(spec, dist, s.room, static_cast<Subgoal>(d), c);
        const int rank = static_cast<int>(f[d]) - d * 5;
        if (r.length < 0) {
          CHECK(rank == kNoDoorRank);
        } else {
          routed.push_back({r.length, d});
          ranks.push_back(rank);
        }
      }
      std::sort(routed.begin(), routed.end());
      for (std::size_t k = 0; k < routed.size(); ++k)
        CHECK(static_cast<int>(f[routed[k].second]) - routed[k].second * 5 == static_cast<int>(k));
      CHECK(f[4] == 20u + (*maze::room_of(spec.goal()) == s.room ? 1u : 0u));
    }
  }
}

TEST_CASE("the HI key identifies the HI features") {
  std::map<std::uint64_t, Features> seen;
  for (std::uint64_t seed = 40; seed < 60; ++seed) {
    const MazeSpec spec = maze::generate_maze(seed);
    const MazeView view(spec);
    for (int i = 0; i < maze::kCells; ++i) {
      const Cell c = Cell::from_index(i);
      if (!maze::room_of(c) || spec.kind(c) == CellKind::Lava) continue;
      const MazeState s = at(c);
      const auto [it, fresh] = seen.emplace(hi_key(view, s), hi_features(view, s));
      if (!fresh) CHECK(it->second == hi_features(view, s));
    }
  }
  std::set<Features> distinct;
  for (const auto& [k, f] : seen) distinct.insert(f);
  CHECK(distinct.size() == seen.size());
}

TEST_CASE("LO and flat features stay in range") {
  Rng rng(5);
  for (std::uint64_t seed = 60; seed < 70; ++seed) {
    const MazeSpec spec = maze::generate_maze(seed);
    const MazeView view(spec);
    for (int i = 0; i < maze::kCells; ++i) {
      const Cell c = Cell::from_index(i);
      if (spec.kind(c) == CellKind::Lava) continue;
      MazeState s;
      s.agent = c;
      s.room = maze::room_of(c).value_or(Room{rng.index(4), rng.index(4)});
      for (Subgoal g : maze::kAllSubgoals) {
        const Features lo = lo_features(view, s, s, g);
        REQUIRE(lo.size() == 1);
        CHECK(lo[0] < static_cast<std::uint32_t>(kLoFeatures));
        CHECK(lo_key(view, s, s, g) == lo[0]);
      }
      const Features flat = flat_features(view, s);
      CHECK(std::set<std::uint32_t>(flat.begin(), flat.end()).size() == flat.size());
      for (auto x : flat) CHECK(x < static_cast<std::uint32_t>(kFlatFeatures));
    }
  }
}

TEST_CASE("LO features follow the entry room, not the agent's") {
  // Room (0,0) with an east door at slot 1 and a south door at slot 2, both
  // leading on to the goal room (1,1).
  const MazeSpec spec = test::make_maze({1, 1}, {6, 6}, {{2, 4}, {4, 3}, {4, 6}, {6, 4}});
  const MazeView view(spec);
  const MazeState entry = at({1, 1});
  MazeState door = entry;
  door.agent = {2, 4};
  const auto inside = lo_features(view, entry, entry, Subgoal::East);
  const auto on_door = lo_features(view, entry, door, Subgoal::East);
  CHECK(inside[0] % 9 == 1);
  CHECK(on_door[0] / 9 == static_cast<std::uint32_t>(maze::local_position(entry.room, door.agent)));
  CHECK(lo_features(view, entry, entry, Subgoal::South)[0] % 9 == 2);
}

TEST_CASE("LO classes pack action and termination") {
  std::set<int> classes;
  for (maze::Action a : maze::kAllActions)
    for (bool omega : {false, true}) {
      const int cls = lo_class(a, omega);
      CHECK(cls >= 0);
      CHECK(cls < kLoClasses);
      CHECK(lo_action(cls) == a);
      CHECK(lo_omega(cls) == omega);
      classes.insert(cls);
    }
  CHECK(classes.size() == static_cast<std::size_t>(kLoClasses));
}
