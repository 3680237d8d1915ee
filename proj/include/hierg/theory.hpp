#ifndef HIERG_THEORY_HPP_
#define HIERG_THEORY_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "hierg/common.hpp"
#include "hierg/cost.hpp"

namespace hierg::theory {

// Per-operation cost constants the bounds are stated in.
struct BoundCosts {
  double full_inspect = 1.0;
  double full_label = 1.0;
  double hi_label = 1.0;
  double lo_inspect = 1.0;
  double lo_label = 1.0;
};

// Largest charge each operation can incur under `model` with the given
// horizons. Per-step labels become C_hi^L = H_hi, C_lo^L = H_lo and
// C_full^L = H_full; fixed costs pass through unchanged.
BoundCosts instantiate(const CostModel& model, int h_hi, int h_lo, int h_full);

struct BoundParams {
  long T = 0;
  double size_M = 1;
  double size_Pi_lo = 1;
  int size_G = 1;
  int size_G_star = 1;
  int H_hi = 1;
  int H_lo = 1;
  int H_full = 1;
  BoundCosts costs;
};

// Throws ConfigError unless sizes are >= 1 and size_G_star <= size_G.
void validate(const BoundParams& p);

double bound_hier(const BoundParams& p);
double bound_flat(const BoundParams& p);
// Throws DivisionByZero when C_full^L is zero.
double cost_ratio(const BoundParams& p);

// A corridor of rooms, each a handful of decision cells. Actions move between
// cells of the room, leave through one of two exits or fall into lava. A room
// visit ends at an exit; it fails after h_lo steps without one. An episode
// starts at cell 0 of a seeded random room and lasts at most h_hi room visits.
//
// The meta class maps rooms to subgoals and the LO class maps cells to
// actions. The expert is a member of both, so realizability holds.
struct SyntheticInstance {
  static constexpr int kLava = -1;
  static constexpr int kGoal = -1;
  static int exit_code(int k) { return -2 - k; }

  std::uint64_t seed = 0;
  int rooms = 2;
  int cells = 2;
  int actions = 2;
  int subgoals = 2;
  int h_hi = 4;
  int h_lo = 2;

  // next[(room * cells + cell) * actions + a]: a cell, kLava or exit_code(k).
  std::vector<int> next;
  // exits[room * 2 + k]: destination room, or kGoal.
  std::vector<int> exits;

  std::vector<std::vector<int>> meta_class;
  std::vector<std::vector<int>> lo_class;
  int expert_meta = 0;
  std::vector<int> expert_lo;  // one LO class index per subgoal

  int h_full() const { return h_hi * h_lo; }
  // Subgoals the expert's meta policy chooses in some room.
  std::vector<int> used_subgoals() const;
  // Throws RealizabilityViolated when the expert is not in its classes.
  void check() const;
};

struct InstanceOptions {
  int min_rooms = 2, max_rooms = 4;
  int min_cells = 2, max_cells = 6;
  int min_actions = 2, max_actions = 3;
  int min_subgoals = 2, max_subgoals = 3;
  std::size_t meta_cap = 256;
  std::size_t lo_cap = 64;
  // Flat DAgger enumerates M x Pi_lo^G explicitly.
  std::size_t product_cap = std::size_t{1} << 17;
};

SyntheticInstance make_instance(std::uint64_t seed, const InstanceOptions& opts = {});

struct VerifyReport {
  std::uint64_t seed = 0;
  int episodes = 0;
  BoundParams params;

  double hier_cost = 0.0;
  double hier_bound = 0.0;
  int hier_failures = 0;
  int hi_mistakes = 0;
  std::vector<int> lo_mistakes;  // per subgoal
  long lo_labels = 0;
  bool hier_converged = false;

  double flat_cost = 0.0;
  double flat_bound = 0.0;
  int flat_failures = 0;
  int flat_mistakes = 0;
  bool flat_converged = false;

  // Every counted mistake at least halved its version space.
  bool halving_ok = true;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  std::string to_text() const;
};

// Runs hg-DAgger with halving learners and flat DAgger with halving over the
// product class for T episodes, with agreement-mode inspections, and checks
// the realized costs and mistake counts against the bounds.
VerifyReport verify_bounds(const SyntheticInstance& inst, int T,
                           const CostModel& model = CostModel::standard());

// Throws BoundViolated listing the report's violations, if any.
void require_within_bounds(const VerifyReport& r);

}  // namespace hierg::theory

#endif  // HIERG_THEORY_HPP_
