#ifndef HIERG_FEATURES_HPP_
#define HIERG_FEATURES_HPP_

#include <cstdint>
#include <vector>

#include "hierg/learners.hpp"
#include "hierg/maze_env.hpp"

namespace hierg::features {

using learn::Features;
using maze::Cell;
using maze::MazeSpec;
using maze::MazeState;
using maze::Room;
using maze::Subgoal;

// What a learner perceives of one maze: the layout and the goal distance
// field. Nothing here is taken from the expert.
class MazeView {
 public:
  explicit MazeView(const MazeSpec& spec);

  const MazeSpec& spec() const { return spec_; }
  int goal_distance(Cell c) const { return dist_[c.index()]; }

  // Length of the best route from `from` that leaves room r through its
  // wall in direction g and then continues to the goal, with the door slot
  // (0..2 along the wall) it uses. Route length is -1 when the wall has no
  // usable door.
  struct Exit {
    int length = -1;
    int slot = 0;
  };
  Exit best_exit(Room r, Subgoal g, Cell from) const;

 private:
  MazeSpec spec_;
  std::vector<int> dist_;
};

inline constexpr int kNoDoorRank = 4;
inline constexpr int kHiFeatures = 4 * 5 + 2;
inline constexpr int kLoFeatures = maze::kLocalPositions * 9;
inline constexpr int kFlatSituations = maze::kLocalPositions * 3;
inline constexpr int kFlatFeatures = 4 * 4 * kFlatSituations + maze::kLocalPositions * 9;

// LO classes pack the action with the termination bit.
inline constexpr int kLoClasses = maze::kNumActions * 2;
inline int lo_class(maze::Action a, bool omega) { return static_cast<int>(a) * 2 + (omega ? 1 : 0); }
inline maze::Action lo_action(int cls) { return static_cast<maze::Action>(cls / 2); }
inline bool lo_omega(int cls) { return cls % 2 == 1; }

// Rank (0 = shortest, ties by wall order N, S, W, E) of each wall's route, or
// kNoDoorRank without a door; plus whether the goal is in the room.
Features hi_features(const MazeView& view, const MazeState& s);

// Agent position in the entry room's frame crossed with the best exit slot of
// wall g, or with the goal position for GoToTarget. Exactly one active index.
Features lo_features(const MazeView& view, const MazeState& entry, const MazeState& s, Subgoal g);

// Conjunction of (wall, rank, position, best slot) for every wall with a door,
// plus (position, goal position) when the goal is in the room.
Features flat_features(const MazeView& view, const MazeState& s);

// Tabular keys for the Q-learning drivers.
inline std::uint64_t lo_key(const MazeView& view, const MazeState& entry, const MazeState& s,
                            Subgoal g) {
  return lo_features(view, entry, s, g).front();
}
std::uint64_t hi_key(const MazeView& view, const MazeState& s);

}  // namespace hierg::features

#endif  // HIERG_FEATURES_HPP_
