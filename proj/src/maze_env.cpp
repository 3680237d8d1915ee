#include "hierg/maze_env.hpp"

#include <deque>
#include <sstream>

#include "hierg/common.hpp"

namespace hierg::maze {

namespace {

bool in_grid(Cell c) { return c.row >= 0 && c.row < kSize && c.col >= 0 && c.col < kSize; }

bool is_wall_line(int v) { return v % kRoomPitch == 0; }

struct Wall {
  Room room;
  Subgoal dir;  // East or South of `room`
};

std::vector<Wall> interior_walls() {
  std::vector<Wall> walls;
  for (int r = 0; r < kRoomsPerSide; ++r) {
    for (int c = 0; c < kRoomsPerSide; ++c) {
      if (c + 1 < kRoomsPerSide) walls.push_back({{r, c}, Subgoal::East});
      if (r + 1 < kRoomsPerSide) walls.push_back({{r, c}, Subgoal::South});
    }
  }
  return walls;
}

}  // namespace

const char* to_string(Action a) {
  switch (a) {
    case Action::Up: return "Up";
    case Action::Down: return "Down";
    case Action::Left: return "Left";
    case Action::Right: return "Right";
  }
  return "?";
}

const char* to_string(Subgoal g) {
  switch (g) {
    case Subgoal::North: return "North";
    case Subgoal::South: return "South";
    case Subgoal::West: return "West";
    case Subgoal::East: return "East";
    case Subgoal::GoToTarget: return "GoToTarget";
  }
  return "?";
}

const char* to_string(Terminal t) {
  switch (t) {
    case Terminal::None: return "None";
    case Terminal::ReachedGoal: return "ReachedGoal";
    case Terminal::HitLava: return "HitLava";
    case Terminal::HorizonExpired: return "HorizonExpired";
  }
  return "?";
}

std::optional<Action> parse_action(std::string_view s) {
  for (Action a : kAllActions)
    if (s == to_string(a)) return a;
  return std::nullopt;
}

std::optional<Subgoal> parse_subgoal(std::string_view s) {
  for (Subgoal g : kAllSubgoals)
    if (s == to_string(g)) return g;
  return std::nullopt;
}

Cell moved(Cell c, Action a) {
  switch (a) {
    case Action::Up: return {c.row - 1, c.col};
    case Action::Down: return {c.row + 1, c.col};
    case Action::Left: return {c.row, c.col - 1};
    case Action::Right: return {c.row, c.col + 1};
  }
  return c;
}

bool is_directional(Subgoal g) { return g != Subgoal::GoToTarget; }

std::optional<Room> neighbor(Room r, Subgoal g) {
  Room n = r;
  switch (g) {
    case Subgoal::North: n.row -= 1; break;
    case Subgoal::South: n.row += 1; break;
    case Subgoal::West: n.col -= 1; break;
    case Subgoal::East: n.col += 1; break;
    case Subgoal::GoToTarget: return std::nullopt;
  }
  if (n.row < 0 || n.row >= kRoomsPerSide || n.col < 0 || n.col >= kRoomsPerSide)
    return std::nullopt;
  return n;
}

std::optional<Room> room_of(Cell c) {
  if (!in_grid(c) || is_wall_line(c.row) || is_wall_line(c.col)) return std::nullopt;
  return Room{c.row / kRoomPitch, c.col / kRoomPitch};
}

std::array<Cell, kRoomInterior> wall_cells(Room r, Subgoal g) {
  std::array<Cell, kRoomInterior> out{};
  const int top = r.row * kRoomPitch;
  const int left = r.col * kRoomPitch;
  for (int i = 0; i < kRoomInterior; ++i) {
    switch (g) {
      case Subgoal::North: out[i] = {top, left + 1 + i}; break;
      case Subgoal::South: out[i] = {top + kRoomPitch, left + 1 + i}; break;
      case Subgoal::West: out[i] = {top + 1 + i, left}; break;
      case Subgoal::East: out[i] = {top + 1 + i, left + kRoomPitch}; break;
      case Subgoal::GoToTarget: throw InvalidSubgoal("GoToTarget has no wall");
    }
  }
  return out;
}

MazeSpec::MazeSpec(std::array<CellKind, kCells> cells, Cell start, Cell goal, std::uint64_t seed)
    : cells_(cells), start_(start), goal_(goal), seed_(seed) {}

Room MazeSpec::goal_room() const { return *room_of(goal_); }

std::vector<Cell> MazeSpec::doors_on_wall(Room r, Subgoal g) const {
  std::vector<Cell> doors;
  if (!neighbor(r, g)) return doors;
  for (Cell c : wall_cells(r, g))
    if (kind(c) == CellKind::Door) doors.push_back(c);
  return doors;
}

bool MazeSpec::admissible(Room r, Subgoal g) const {
  if (g == Subgoal::GoToTarget) return goal_room() == r;
  return !doors_on_wall(r, g).empty();
}

std::string MazeSpec::to_text() const {
  std::ostringstream out;
  out << "seed " << seed_ << '\n';
  for (int r = 0; r < kSize; ++r) {
    for (int c = 0; c < kSize; ++c) {
      const Cell cell{r, c};
      char ch = '.';
      if (cell == start_) {
        ch = 'S';
      } else {
        switch (kind(cell)) {
          case CellKind::Open: ch = '.'; break;
          case CellKind::Lava: ch = '#'; break;
          case CellKind::Door: ch = 'D'; break;
          case CellKind::Goal: ch = 'G'; break;
        }
      }
      out << ch;
    }
    out << '\n';
  }
  return out.str();
}

MazeSpec MazeSpec::from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string word;
  std::uint64_t seed = 0;
  if (!(in >> word >> seed) || word != "seed") throw ParseError("maze: missing 'seed' header");
  std::string line;
  std::getline(in, line);
  std::array<CellKind, kCells> cells{};
  std::optional<Cell> start, goal;
  for (int r = 0; r < kSize; ++r) {
    if (!std::getline(in, line) || static_cast<int>(line.size()) != kSize)
      throw ParseError("maze: row " + std::to_string(r) + " must have 17 characters");
    for (int c = 0; c < kSize; ++c) {
      CellKind k;
      switch (line[c]) {
        case '.': k = CellKind::Open; break;
        case '#': k = CellKind::Lava; break;
        case 'D': k = CellKind::Door; break;
        case 'G': k = CellKind::Goal; goal = Cell{r, c}; break;
        case 'S': k = CellKind::Open; start = Cell{r, c}; break;
        default: throw ParseError(std::string("maze: unknown cell '") + line[c] + "'");
      }
      cells[Cell{r, c}.index()] = k;
    }
  }
  if (!start || !goal) throw ParseError("maze: missing start or goal");
  return MazeSpec(cells, *start, *goal, seed);
}

MazeState initial_state(const MazeSpec& spec) {
  MazeState s;
  s.agent = spec.start();
  s.trail.set(s.agent.index());
  s.room = *room_of(s.agent);
  return s;
}

std::vector<int> bfs_distances(const MazeSpec& spec, Cell target) {
  std::vector<int> dist(kCells, -1);
  std::deque<Cell> frontier{target};
  dist[target.index()] = 0;
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop_front();
    for (Action a : kAllActions) {
      const Cell n = moved(c, a);
      if (!in_grid(n) || !spec.passable(n) || dist[n.index()] >= 0) continue;
      dist[n.index()] = dist[c.index()] + 1;
      frontier.push_back(n);
    }
  }
  return dist;
}

int shortest_path_length(const MazeSpec& spec) {
  return bfs_distances(spec, spec.goal())[spec.start().index()];
}

MazeSpec generate_maze(std::uint64_t seed, int min_dist, int max_attempts) {
  if (min_dist < 1) throw GenerationFailed("min_dist must be >= 1");
  Rng rng(seed);
  const auto walls = interior_walls();
  std::vector<Cell> interior;
  for (int i = 0; i < kCells; ++i)
    if (room_of(Cell::from_index(i))) interior.push_back(Cell::from_index(i));

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::array<CellKind, kCells> cells;
    for (int i = 0; i < kCells; ++i)
      cells[i] = room_of(Cell::from_index(i)) ? CellKind::Open : CellKind::Lava;
    Cell goal, start;
    do {
      goal = interior[rng.index(interior.size())];
      start = interior[rng.index(interior.size())];
    } while (goal == start);
    cells[goal.index()] = CellKind::Goal;

    int lava_left = static_cast<int>(walls.size()) * kRoomInterior;
    while (lava_left > 0) {
      const Wall& w = walls[rng.index(walls.size())];
      std::vector<Cell> lava;
      for (Cell c : wall_cells(w.room, w.dir))
        if (cells[c.index()] == CellKind::Lava) lava.push_back(c);
      if (lava.empty()) continue;
      cells[lava[rng.index(lava.size())].index()] = CellKind::Door;
      --lava_left;
      MazeSpec candidate(cells, start, goal, seed);
      const int d = shortest_path_length(candidate);
      if (d < 0) continue;
      // Opening more doors can only shorten the path, so a short first
      // feasible path rejects the whole attempt.
      if (d >= min_dist && d <= kFullHorizon) return candidate;
      break;
    }
  }
  throw GenerationFailed("no maze with shortest path >= " + std::to_string(min_dist) +
                         " after " + std::to_string(max_attempts) + " attempts (seed " +
                         std::to_string(seed) + ")");
}

StepResult step(const MazeSpec& spec, const MazeState& state, Action action) {
  if (state.terminal != Terminal::None) throw InvalidState("step on terminal maze state");
  StepResult out{state, 0.0};
  MazeState& s = out.state;
  s.agent = moved(state.agent, action);
  s.steps += 1;
  if (!in_grid(s.agent) || spec.kind(s.agent) == CellKind::Lava) {
    s.terminal = Terminal::HitLava;
    out.reward = kLavaReward;
    return out;
  }
  s.trail.set(s.agent.index());
  if (auto r = room_of(s.agent)) s.room = *r;
  if (s.agent == spec.goal()) {
    s.terminal = Terminal::ReachedGoal;
    out.reward = kGoalReward;
  } else if (s.steps >= kFullHorizon) {
    s.terminal = Terminal::HorizonExpired;
  }
  return out;
}

bool subgoal_completed(const MazeSpec& spec, const MazeState& entry, const MazeState& current,
                       Subgoal g) {
  if (g == Subgoal::GoToTarget) return current.agent == spec.goal();
  if (current.terminal == Terminal::HitLava) return false;
  const auto target = neighbor(entry.room, g);
  return target && room_of(current.agent) == target;
}

double pseudo_reward(const MazeSpec& spec, const MazeState& entry, const MazeState& from,
                     const MazeState& to, Subgoal g) {
  if (to.terminal == Terminal::HitLava) return -1.0;
  if (subgoal_completed(spec, entry, to, g) && !subgoal_completed(spec, entry, from, g))
    return 1.0;
  const auto target = neighbor(entry.room, g);
  if (to.room != from.room && to.room != entry.room && (!target || to.room != *target))
    return -1.0;
  return 0.0;
}

int local_position(Room r, Cell c) {
  const int lr = c.row - r.row * kRoomPitch;
  const int lc = c.col - r.col * kRoomPitch;
  if (lr < 0 || lr >= kLocalFrame || lc < 0 || lc >= kLocalFrame) return kLocalPositions - 1;
  return lr * kLocalFrame + lc;
}

std::vector<float> encode_observation(const MazeSpec& spec, const MazeState& state, Frame frame) {
  if (frame == Frame::Global) {
    std::vector<float> v(kGlobalDim, 0.0f);
    for (int i = 0; i < kCells; ++i) {
      const CellKind k = spec.cells()[i];
      if (k == CellKind::Lava) v[i] = 1.0f;
      if (k == CellKind::Door) v[kCells + i] = 1.0f;
      if (k == CellKind::Goal) v[2 * kCells + i] = 1.0f;
      if (state.trail.test(i)) v[4 * kCells + i] = 1.0f;
    }
    if (state.terminal != Terminal::HitLava) v[3 * kCells + state.agent.index()] = 1.0f;
    return v;
  }
  std::vector<float> v(kRoomLocalDim, 0.0f);
  const Room r = state.room;
  v[local_position(r, state.agent)] = 1.0f;
  int offset = kLocalPositions;
  for (Subgoal g : {Subgoal::North, Subgoal::South, Subgoal::West, Subgoal::East}) {
    if (neighbor(r, g)) {
      const auto cells = wall_cells(r, g);
      for (int i = 0; i < kRoomInterior; ++i)
        v[offset + i] = spec.kind(cells[i]) == CellKind::Door ? 1.0f : 0.0f;
    }
    offset += kRoomInterior;
  }
  if (spec.goal_room() == r) {
    const int gr = spec.goal().row - r.row * kRoomPitch - 1;
    const int gc = spec.goal().col - r.col * kRoomPitch - 1;
    v[offset + gr * kRoomInterior + gc] = 1.0f;
  } else {
    v[offset + kRoomInterior * kRoomInterior] = 1.0f;
  }
  return v;
}

}  // namespace hierg::maze
