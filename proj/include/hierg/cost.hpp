#ifndef HIERG_COST_HPP_
#define HIERG_COST_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace hierg {

enum class OpKind : std::uint8_t { Inspect, Label };
enum class Level : std::uint8_t { Full, Hi, Lo };

const char* to_string(OpKind k);
const char* to_string(Level l);

// Cost of one operation: a fixed constant, or the length of the trajectory
// the operation covers.
struct OpCost {
  double constant = 1.0;
  bool per_step = false;

  double charge(std::size_t length) const {
    return per_step ? static_cast<double>(length) : constant;
  }
  static OpCost fixed(double c) { return {c, false}; }
  static OpCost steps() { return {0.0, true}; }
};

struct CostModel {
  OpCost full_inspect = OpCost::fixed(1.0);
  OpCost full_label = OpCost::steps();
  OpCost hi_label = OpCost::steps();
  OpCost lo_inspect = OpCost::fixed(1.0);
  OpCost lo_label = OpCost::steps();

  // Default convention: inspect costs 1, label costs the labeled length.
  static CostModel standard() { return {}; }
};

struct LedgerRow {
  int episode = 0;
  OpKind op = OpKind::Inspect;
  Level level = Level::Full;
  long count = 0;
  double cost = 0.0;
  double cumulative_cost = 0.0;
};

// Running totals of expert operations per (kind, level), with a per-episode
// breakdown. Single writer.
class CostLedger {
 public:
  explicit CostLedger(CostModel model = CostModel::standard()) : model_(model) {}

  const CostModel& model() const { return model_; }

  void begin_episode(int episode) { episode_ = episode; }
  int episode() const { return episode_; }

  // Records one operation of `length` steps; returns the charged cost.
  double charge(OpKind op, Level level, std::size_t length);
  // Records an operation with an explicit cost (already priced by the caller).
  void record(OpKind op, Level level, double cost, long count = 1);

  double total() const { return total_; }
  double cost(OpKind op, Level level) const { return cost_[slot(op, level)]; }
  long count(OpKind op, Level level) const { return count_[slot(op, level)]; }
  double inspect_cost() const;
  double label_cost() const;

  // One row per (episode, op, level) with nonzero count, in charge order.
  const std::vector<LedgerRow>& rows() const { return rows_; }
  std::string to_csv() const;

 private:
  static int slot(OpKind op, Level level) {
    return static_cast<int>(op) * 3 + static_cast<int>(level);
  }
  const OpCost& price(OpKind op, Level level) const;

  CostModel model_;
  int episode_ = 0;
  double total_ = 0.0;
  std::array<double, 6> cost_{};
  std::array<long, 6> count_{};
  std::vector<LedgerRow> rows_;
};

}  // namespace hierg

#endif  // HIERG_COST_HPP_
