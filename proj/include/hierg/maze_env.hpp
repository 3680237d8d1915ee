#ifndef HIERG_MAZE_ENV_HPP_
#define HIERG_MAZE_ENV_HPP_

#include <array>
#include <bitset>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hierg::maze {

inline constexpr int kSize = 17;
inline constexpr int kCells = kSize * kSize;
inline constexpr int kRoomsPerSide = 4;
inline constexpr int kRoomInterior = 3;
inline constexpr int kRoomPitch = kRoomInterior + 1;
inline constexpr int kFullHorizon = 100;
inline constexpr int kDefaultMinDist = 40;
inline constexpr double kGoalReward = 1.0;
inline constexpr double kLavaReward = -1.0;

enum class CellKind : std::uint8_t { Open, Lava, Door, Goal };

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
  int index() const { return row * kSize + col; }
  static Cell from_index(int i) { return {i / kSize, i % kSize}; }
};

struct Room {
  int row = 0;
  int col = 0;
  auto operator<=>(const Room&) const = default;
  int index() const { return row * kRoomsPerSide + col; }
};

enum class Action : std::uint8_t { Up, Down, Left, Right };
inline constexpr int kNumActions = 4;
inline constexpr std::array<Action, kNumActions> kAllActions = {Action::Up, Action::Down,
                                                                Action::Left, Action::Right};

enum class Subgoal : std::uint8_t { North, South, West, East, GoToTarget };
inline constexpr int kNumSubgoals = 5;
inline constexpr std::array<Subgoal, kNumSubgoals> kAllSubgoals = {
    Subgoal::North, Subgoal::South, Subgoal::West, Subgoal::East, Subgoal::GoToTarget};

enum class Terminal : std::uint8_t { None, ReachedGoal, HitLava, HorizonExpired };

const char* to_string(Action a);
const char* to_string(Subgoal g);
const char* to_string(Terminal t);
std::optional<Action> parse_action(std::string_view s);
std::optional<Subgoal> parse_subgoal(std::string_view s);

Cell moved(Cell c, Action a);
bool is_directional(Subgoal g);
// Room adjacent in the subgoal's direction, if inside the 4x4 arrangement.
std::optional<Room> neighbor(Room r, Subgoal g);

struct Horizons {
  int full = kFullHorizon;
  int lo = 8;
  int hi = 20;
};

// Immutable maze definition: 17x17 grid of 4x4 rooms with 3x3 open interiors
// separated by one-cell lava walls.
class MazeSpec {
 public:
  MazeSpec() = default;
  MazeSpec(std::array<CellKind, kCells> cells, Cell start, Cell goal, std::uint64_t seed);

  CellKind kind(Cell c) const { return cells_[c.index()]; }
  bool passable(Cell c) const { return kind(c) != CellKind::Lava; }
  Cell start() const { return start_; }
  Cell goal() const { return goal_; }
  std::uint64_t seed() const { return seed_; }
  const std::array<CellKind, kCells>& cells() const { return cells_; }

  Room goal_room() const;
  // Door cells on the wall between r and its neighbor in direction g.
  std::vector<Cell> doors_on_wall(Room r, Subgoal g) const;
  // Whether subgoal g can be issued from room r.
  bool admissible(Room r, Subgoal g) const;

  std::string to_text() const;
  static MazeSpec from_text(std::string_view text);

  bool operator==(const MazeSpec&) const = default;

 private:
  std::array<CellKind, kCells> cells_{};
  Cell start_{};
  Cell goal_{};
  std::uint64_t seed_ = 0;
};

// Interior cells belong to a room; wall and door cells do not.
std::optional<Room> room_of(Cell c);
// Cells of the wall segment between r and neighbor(r, g) (3 cells, row-major).
std::array<Cell, kRoomInterior> wall_cells(Room r, Subgoal g);

struct MazeState {
  Cell agent;
  std::bitset<kCells> trail;
  int steps = 0;
  Terminal terminal = Terminal::None;
  // Room of the most recent interior cell visited; door cells keep it.
  Room room;

  bool operator==(const MazeState&) const = default;
};

MazeState initial_state(const MazeSpec& spec);

// Generates a maze from a seed: rejection-samples start/goal, then opens random
// wall cells until the goal is reachable. Attempts whose first feasible
// shortest path is below min_dist (or above the episode horizon) restart.
MazeSpec generate_maze(std::uint64_t seed, int min_dist = kDefaultMinDist,
                       int max_attempts = 10000);

struct StepResult {
  MazeState state;
  double reward = 0.0;
};

StepResult step(const MazeSpec& spec, const MazeState& state, Action action);

bool subgoal_completed(const MazeSpec& spec, const MazeState& entry, const MazeState& current,
                       Subgoal g);

double pseudo_reward(const MazeSpec& spec, const MazeState& entry, const MazeState& from,
                     const MazeState& to, Subgoal g);

enum class Frame { Global, RoomLocal };

inline constexpr int kGlobalChannels = 5;  // lava, door, goal, agent, trail
inline constexpr int kGlobalDim = kGlobalChannels * kCells;
inline constexpr int kLocalFrame = kRoomInterior + 2;  // 5x5 room plus its walls
inline constexpr int kLocalPositions = kLocalFrame * kLocalFrame + 1;  // +1: outside
inline constexpr int kRoomLocalDim = kLocalPositions + 4 * kRoomInterior + kRoomInterior * kRoomInterior + 1;

std::vector<float> encode_observation(const MazeSpec& spec, const MazeState& state, Frame frame);

// Agent position inside the 5x5 frame of room r, or kLocalPositions-1 if outside.
int local_position(Room r, Cell c);

// Breadth-first distances to `target` over non-lava cells; -1 where unreachable.
std::vector<int> bfs_distances(const MazeSpec& spec, Cell target);
int shortest_path_length(const MazeSpec& spec);

}  // namespace hierg::maze

#endif  // HIERG_MAZE_ENV_HPP_
