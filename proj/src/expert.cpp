#include "hierg/expert.hpp"

#include <cmath>

#include "hierg/common.hpp"

namespace hierg::expert {

using maze::CellKind;
using maze::Terminal;

namespace {

// Shared Jacobi sweep. `frozen` marks absorbing cells whose entry value is
// given by `entry_value` (reward on entry plus discounted continuation).
ValueTable solve(double gamma, double tolerance,
                 const std::vector<char>& frozen, const std::vector<double>& entry_value) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error("discount must lie in (0, 1]");
  // With no discounting a step cost keeps shortest paths strictly preferred.
  const double step_reward = gamma < 1.0 ? 0.0 : -1e-3;
  ValueTable t;
  t.gamma = gamma;
  t.value.assign(maze::kCells, 0.0);
  t.policy.assign(maze::kCells, Action::Up);
  std::vector<double> next(maze::kCells, 0.0);
  auto q = [&](const std::vector<double>& v, Cell c, Action a) {
    const Cell n = maze::moved(c, a);
    const int ni = n.index();
    if (frozen[ni]) return entry_value[ni];
    return step_reward + gamma * v[ni];
  };
  for (;;) {
    double residual = 0.0;
    for (int i = 0; i < maze::kCells; ++i) {
      if (frozen[i]) continue;
      const Cell c = Cell::from_index(i);
      double best = -INFINITY;
      for (Action a : maze::kAllActions) best = std::max(best, q(t.value, c, a));
      next[i] = best;
      residual = std::max(residual, std::abs(best - t.value[i]));
    }
    t.value.swap(next);
    ++t.sweeps;
    t.residual = residual;
    if (residual <= tolerance) break;
    if (t.sweeps > 100000) throw NoPath("value iteration did not converge");
  }
  for (int i = 0; i < maze::kCells; ++i) {
    if (frozen[i]) continue;
    const Cell c = Cell::from_index(i);
    double best = -INFINITY;
    for (Action a : maze::kAllActions) {
      const double v = q(t.value, c, a);
      if (v > best) {
        best = v;
        t.policy[i] = a;
      }
    }
  }
  return t;
}

}  // namespace

ValueTable value_iteration(const MazeSpec& spec, double gamma, double tolerance) {
  std::vector<char> frozen(maze::kCells, 0);
  std::vector<double> entry(maze::kCells, 0.0);
  for (int i = 0; i < maze::kCells; ++i) {
    const CellKind k = spec.cells()[i];
    if (k == CellKind::Lava) {
      frozen[i] = 1;
      entry[i] = maze::kLavaReward;
    } else if (k == CellKind::Goal) {
      frozen[i] = 1;
      entry[i] = maze::kGoalReward;
    }
  }
  ValueTable t = solve(gamma, tolerance, frozen, entry);
  if (!(t.value[spec.start().index()] > 0.0)) throw NoPath("goal unreachable from start");
  return t;
}

ValueTable subgoal_value_iteration(const MazeSpec& spec, const ValueTable& global, Room entry,
                                   Subgoal g, double tolerance) {
  if (g == Subgoal::GoToTarget) return global;
  const auto target = maze::neighbor(entry, g);
  if (!target) throw InvalidSubgoal("subgoal leaves the maze");
  std::vector<char> frozen(maze::kCells, 0);
  std::vector<double> value(maze::kCells, 0.0);
  const double step_reward = global.gamma < 1.0 ? 0.0 : -1e-3;
  // Entering a third room fails the subtask like lava. Target cells carry a
  // small floor so rooms cut off from the goal are still worth reaching.
  constexpr double kFloor = 1e-6;
  for (int i = 0; i < maze::kCells; ++i) {
    const Cell c = Cell::from_index(i);
    const CellKind k = spec.cells()[i];
    const auto room = maze::room_of(c);
    if (k == CellKind::Lava) {
      frozen[i] = 1;
      value[i] = maze::kLavaReward;
    } else if (room == target) {
      frozen[i] = 1;
      value[i] = k == CellKind::Goal ? maze::kGoalReward
                                     : step_reward + global.gamma * global.value[i] + kFloor;
    } else if (room && *room != entry) {
      frozen[i] = 1;
      value[i] = maze::kLavaReward;
    } else if (k == CellKind::Goal) {
      frozen[i] = 1;
      value[i] = 0.0;
    }
  }
  return solve(global.gamma, tolerance, frozen, value);
}

std::vector<Cell> greedy_path(const MazeSpec& spec, const ValueTable& table, Cell from,
                              int limit) {
  std::vector<Cell> path{from};
  Cell c = from;
  for (int i = 0; i < limit; ++i) {
    const CellKind k = spec.kind(c);
    if (k == CellKind::Lava || k == CellKind::Goal) break;
    c = maze::moved(c, table.policy[c.index()]);
    path.push_back(c);
  }
  return path;
}

Trajectory HierTrajectory::full() const {
  Trajectory t;
  t.states.push_back(initial);
  for (const auto& seg : segments) {
    for (std::size_t i = 0; i < seg.steps.size(); ++i) {
      t.actions.push_back(seg.steps[i].action);
      t.states.push_back(i + 1 < seg.steps.size() ? seg.steps[i + 1].state : seg.exit);
    }
  }
  return t;
}

std::vector<MazeState> HierTrajectory::hi_states() const {
  std::vector<MazeState> out;
  out.reserve(segments.size());
  for (const auto& seg : segments) out.push_back(seg.entry);
  return out;
}

std::vector<Subgoal> HierTrajectory::hi_subgoals() const {
  std::vector<Subgoal> out;
  out.reserve(segments.size());
  for (const auto& seg : segments) out.push_back(seg.subgoal);
  return out;
}

std::size_t HierTrajectory::lo_length() const {
  std::size_t n = 0;
  for (const auto& seg : segments) n += seg.steps.size();
  return n;
}

Oracle::Key Oracle::key_of(const MazeSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (CellKind k : spec.cells()) {
    h ^= static_cast<std::uint8_t>(k);
    h *= 0x100000001b3ull;
  }
  return h;
}

const ValueTable& Oracle::values(const MazeSpec& spec) {
  auto& slot = global_[key_of(spec)];
  if (!slot) slot = std::make_unique<ValueTable>(value_iteration(spec, gamma_, tolerance_));
  return *slot;
}

const ValueTable& Oracle::subgoal_values(const MazeSpec& spec, Room entry, Subgoal g) {
  if (g == Subgoal::GoToTarget) return values(spec);
  auto& slot = local_[{key_of(spec), entry.index(), static_cast<int>(g)}];
  if (!slot) {
    slot = std::make_unique<ValueTable>(
        subgoal_value_iteration(spec, values(spec), entry, g, tolerance_));
  }
  return *slot;
}

Subgoal Oracle::optimal_subgoal(const MazeSpec& spec, const MazeState& s) {
  if (spec.goal_room() == s.room) return Subgoal::GoToTarget;
  for (Cell c : greedy_path(spec, values(spec), s.agent)) {
    const auto r = maze::room_of(c);
    if (!r || *r == s.room) continue;
    if (r->row < s.room.row) return Subgoal::North;
    if (r->row > s.room.row) return Subgoal::South;
    if (r->col < s.room.col) return Subgoal::West;
    return Subgoal::East;
  }
  throw NoPath("optimal path never leaves the current room");
}

LoLabel Oracle::subgoal_label(const MazeSpec& spec, const MazeState& entry, const MazeState& s,
                              Subgoal g) {
  if (!spec.admissible(entry.room, g)) {
    throw InvalidSubgoal(std::string("subgoal ") + maze::to_string(g) +
                         " is not admissible from the entry room");
  }
  LoLabel out{};
  if (g == Subgoal::GoToTarget) {
    out.action = optimal_action(spec, s.agent);
    out.omega = maze::moved(s.agent, out.action) == spec.goal();
    return out;
  }
  const auto target = maze::neighbor(entry.room, g);
  if (maze::room_of(s.agent) == target) {
    out.action = optimal_action(spec, s.agent);
    out.omega = true;
    return out;
  }
  out.action = subgoal_values(spec, entry.room, g).policy[s.agent.index()];
  out.omega = maze::room_of(maze::moved(s.agent, out.action)) == target;
  return out;
}

HierTrajectory Oracle::hier_demo(const MazeSpec& spec) {
  HierTrajectory demo;
  demo.initial = maze::initial_state(spec);
  MazeState s = demo.initial;
  while (s.terminal == Terminal::None) {
    Segment seg;
    seg.entry = s;
    seg.subgoal = optimal_subgoal(spec, s);
    while (s.terminal == Terminal::None) {
      const LoLabel label = subgoal_label(spec, seg.entry, s, seg.subgoal);
      const MazeState next = maze::step(spec, s, label.action).state;
      const bool done = maze::subgoal_completed(spec, seg.entry, next, seg.subgoal);
      seg.steps.push_back({s, label.action, done});
      s = next;
      if (done) break;
    }
    seg.exit = s;
    demo.segments.push_back(std::move(seg));
  }
  return demo;
}

Trajectory Oracle::flat_demo(const MazeSpec& spec) {
  Trajectory t;
  t.states.push_back(maze::initial_state(spec));
  while (t.final_state().terminal == Terminal::None) {
    const Action a = optimal_action(spec, t.final_state().agent);
    t.actions.push_back(a);
    t.states.push_back(maze::step(spec, t.final_state(), a).state);
  }
  return t;
}

bool Oracle::agrees(const MazeSpec& spec, const Trajectory& t) {
  for (std::size_t i = 0; i < t.actions.size(); ++i)
    if (t.actions[i] != optimal_action(spec, t.states[i].agent)) return false;
  return true;
}

Verdict Expert::inspect_full(const MazeSpec& spec, const Trajectory& t, CostLedger& ledger) {
  ledger.charge(OpKind::Inspect, Level::Full, t.length());
  return do_inspect_full(spec, t);
}

std::vector<Action> Expert::label_full(const MazeSpec& spec, const Trajectory& t,
                                       CostLedger& ledger) {
  ledger.charge(OpKind::Label, Level::Full, t.length());
  return do_label_full(spec, t);
}

std::vector<Subgoal> Expert::label_hi(const MazeSpec& spec, std::span<const MazeState> hi_states,
                                      CostLedger& ledger) {
  ledger.charge(OpKind::Label, Level::Hi, hi_states.size());
  return do_label_hi(spec, hi_states);
}

Verdict Expert::inspect_lo(const MazeSpec& spec, const Segment& seg, CostLedger& ledger) {
  ledger.charge(OpKind::Inspect, Level::Lo, seg.steps.size());
  return do_inspect_lo(spec, seg);
}

std::vector<LoLabel> Expert::label_lo(const MazeSpec& spec, const Segment& seg,
                                      CostLedger& ledger) {
  ledger.charge(OpKind::Label, Level::Lo, seg.steps.size());
  return do_label_lo(spec, seg);
}

HierTrajectory Expert::hier_demo(const MazeSpec& spec, CostLedger& ledger) {
  HierTrajectory demo = do_hier_demo(spec);
  ledger.charge(OpKind::Label, Level::Hi, demo.segments.size());
  for (const auto& seg : demo.segments) ledger.charge(OpKind::Label, Level::Lo, seg.steps.size());
  return demo;
}

Trajectory Expert::flat_demo(const MazeSpec& spec, CostLedger& ledger) {
  Trajectory t = do_flat_demo(spec);
  ledger.charge(OpKind::Label, Level::Full, t.length());
  return t;
}

Verdict SyntheticExpert::do_inspect_full(const MazeSpec& spec, const Trajectory& t) {
  if (mode_ == InspectMode::Agreement) return oracle_.agrees(spec, t) ? Verdict::Pass : Verdict::Fail;
  return t.final_state().terminal == Terminal::ReachedGoal ? Verdict::Pass : Verdict::Fail;
}

std::vector<Action> SyntheticExpert::do_label_full(const MazeSpec& spec, const Trajectory& t) {
  std::vector<Action> out;
  out.reserve(t.length());
  for (std::size_t i = 0; i < t.length(); ++i)
    out.push_back(oracle_.optimal_action(spec, t.states[i].agent));
  return out;
}

std::vector<Subgoal> SyntheticExpert::do_label_hi(const MazeSpec& spec,
                                                  std::span<const MazeState> hi_states) {
  std::vector<Subgoal> out;
  out.reserve(hi_states.size());
  for (const auto& s : hi_states) out.push_back(oracle_.optimal_subgoal(spec, s));
  return out;
}

Verdict SyntheticExpert::do_inspect_lo(const MazeSpec& spec, const Segment& seg) {
  return maze::subgoal_completed(spec, seg.entry, seg.exit, seg.subgoal) ? Verdict::Pass
                                                                         : Verdict::Fail;
}

std::vector<LoLabel> SyntheticExpert::do_label_lo(const MazeSpec& spec, const Segment& seg) {
  std::vector<LoLabel> out;
  out.reserve(seg.steps.size());
  for (const auto& st : seg.steps)
    out.push_back(oracle_.subgoal_label(spec, seg.entry, st.state, seg.subgoal));
  return out;
}

HierTrajectory SyntheticExpert::do_hier_demo(const MazeSpec& spec) {
  return oracle_.hier_demo(spec);
}

Trajectory SyntheticExpert::do_flat_demo(const MazeSpec& spec) { return oracle_.flat_demo(spec); }

}  // namespace hierg::expert
