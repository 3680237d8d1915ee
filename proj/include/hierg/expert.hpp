#ifndef HIERG_EXPERT_HPP_
#define HIERG_EXPERT_HPP_

#include <map>
#include <memory>
#include <span>
#include <tuple>
#include <vector>

#include "hierg/cost.hpp"
#include "hierg/maze_env.hpp"

namespace hierg::expert {

using maze::Action;
using maze::Cell;
using maze::MazeSpec;
using maze::MazeState;
using maze::Room;
using maze::Subgoal;

inline constexpr double kDefaultGamma = 0.99;
inline constexpr double kDefaultTolerance = 1e-9;

// Converged state values and the greedy policy (ties broken Up, Down, Left,
// Right). Values of absorbing cells are unused.
struct ValueTable {
  std::vector<double> value;
  std::vector<Action> policy;
  double gamma = kDefaultGamma;
  double residual = 0.0;
  int sweeps = 0;
};

ValueTable value_iteration(const MazeSpec& spec, double gamma = kDefaultGamma,
                           double tolerance = kDefaultTolerance);

// Value iteration for the subtask "leave `entry` through its wall toward g":
// interior cells of the target room are absorbing with the global value, so
// greedy actions pick the exit that is best for the whole task.
ValueTable subgoal_value_iteration(const MazeSpec& spec, const ValueTable& global, Room entry,
                                   Subgoal g, double tolerance = kDefaultTolerance);

// Greedy rollout of a value table from `from` until an absorbing cell or
// `limit` steps. Returns visited cells including `from`.
std::vector<Cell> greedy_path(const MazeSpec& spec, const ValueTable& table, Cell from,
                              int limit = 4 * maze::kCells);

struct Trajectory {
  std::vector<MazeState> states;  // s_0 .. s_n
  std::vector<Action> actions;    // a_0 .. a_{n-1}

  std::size_t length() const { return actions.size(); }
  const MazeState& final_state() const { return states.back(); }
};

// One LO-level step; omega marks the step whose action completes the subgoal.
struct LoStep {
  MazeState state;
  Action action;
  bool omega = false;
};

struct Segment {
  MazeState entry;
  Subgoal subgoal;
  std::vector<LoStep> steps;
  MazeState exit;  // state after the last step
};

struct HierTrajectory {
  MazeState initial;
  std::vector<Segment> segments;

  const MazeState& final_state() const {
    return segments.empty() ? initial : segments.back().exit;
  }
  Trajectory full() const;
  std::vector<MazeState> hi_states() const;
  std::vector<Subgoal> hi_subgoals() const;
  std::size_t lo_length() const;
};

enum class InspectMode { Outcome, Agreement };
enum class Verdict { Pass, Fail };

struct LoLabel {
  Action action;
  bool omega = false;
};

// Optimal-policy oracle backed by value iteration, with per-maze caches.
class Oracle {
 public:
  explicit Oracle(double gamma = kDefaultGamma, double tolerance = kDefaultTolerance)
      : gamma_(gamma), tolerance_(tolerance) {}

  const ValueTable& values(const MazeSpec& spec);
  const ValueTable& subgoal_values(const MazeSpec& spec, Room entry, Subgoal g);

  Action optimal_action(const MazeSpec& spec, Cell c) {
    return values(spec).policy[c.index()];
  }
  // First room entered along the optimal path from s, or GoToTarget when the
  // goal lies in s's room.
  Subgoal optimal_subgoal(const MazeSpec& spec, const MazeState& s);
  // Expert LO label for a state executing subgoal g issued from `entry`.
  LoLabel subgoal_label(const MazeSpec& spec, const MazeState& entry, const MazeState& s,
                        Subgoal g);

  // Hierarchical demonstration from the start state: the optimal rollout,
  // segmented where the expert's subgoal is achieved.
  HierTrajectory hier_demo(const MazeSpec& spec);
  Trajectory flat_demo(const MazeSpec& spec);

  bool agrees(const MazeSpec& spec, const Trajectory& t);

 private:
  using Key = std::uint64_t;
  static Key key_of(const MazeSpec& spec);

  double gamma_;
  double tolerance_;
  std::map<Key, std::unique_ptr<ValueTable>> global_;
  std::map<std::tuple<Key, int, int>, std::unique_ptr<ValueTable>> local_;
};

// Expert interface used by the learning drivers. Costs are charged by the
// non-virtual entry points so every implementation is priced identically.
class Expert {
 public:
  virtual ~Expert() = default;

  Verdict inspect_full(const MazeSpec& spec, const Trajectory& t, CostLedger& ledger);
  std::vector<Action> label_full(const MazeSpec& spec, const Trajectory& t, CostLedger& ledger);
  std::vector<Subgoal> label_hi(const MazeSpec& spec, std::span<const MazeState> hi_states,
                                CostLedger& ledger);
  Verdict inspect_lo(const MazeSpec& spec, const Segment& seg, CostLedger& ledger);
  std::vector<LoLabel> label_lo(const MazeSpec& spec, const Segment& seg, CostLedger& ledger);
  // Demonstrations are charged as labels of the demonstrated trajectories.
  HierTrajectory hier_demo(const MazeSpec& spec, CostLedger& ledger);
  Trajectory flat_demo(const MazeSpec& spec, CostLedger& ledger);

 protected:
  virtual Verdict do_inspect_full(const MazeSpec& spec, const Trajectory& t) = 0;
  virtual std::vector<Action> do_label_full(const MazeSpec& spec, const Trajectory& t) = 0;
  virtual std::vector<Subgoal> do_label_hi(const MazeSpec& spec,
                                           std::span<const MazeState> hi_states) = 0;
  virtual Verdict do_inspect_lo(const MazeSpec& spec, const Segment& seg) = 0;
  virtual std::vector<LoLabel> do_label_lo(const MazeSpec& spec, const Segment& seg) = 0;
  virtual HierTrajectory do_hier_demo(const MazeSpec& spec) = 0;
  virtual Trajectory do_flat_demo(const MazeSpec& spec) = 0;
};

class SyntheticExpert : public Expert {
 public:
  explicit SyntheticExpert(InspectMode mode = InspectMode::Outcome) : mode_(mode) {}

  Oracle& oracle() { return oracle_; }
  InspectMode mode() const { return mode_; }

 protected:
  Verdict do_inspect_full(const MazeSpec& spec, const Trajectory& t) override;
  std::vector<Action> do_label_full(const MazeSpec& spec, const Trajectory& t) override;
  std::vector<Subgoal> do_label_hi(const MazeSpec& spec,
                                   std::span<const MazeState> hi_states) override;
  Verdict do_inspect_lo(const MazeSpec& spec, const Segment& seg) override;
  std::vector<LoLabel> do_label_lo(const MazeSpec& spec, const Segment& seg) override;
  HierTrajectory do_hier_demo(const MazeSpec& spec) override;
  Trajectory do_flat_demo(const MazeSpec& spec) override;

 private:
  Oracle oracle_;
  InspectMode mode_;
};

}  // namespace hierg::expert

#endif  // HIERG_EXPERT_HPP_
