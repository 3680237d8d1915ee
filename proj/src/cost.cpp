#include "hierg/cost.hpp"

#include <sstream>

#include "hierg/common.hpp"

namespace hierg {

const char* to_string(OpKind k) { return k == OpKind::Inspect ? "inspect" : "label"; }

const char* to_string(Level l) {
  switch (l) {
    case Level::Full: return "full";
    case Level::Hi: return "hi";
    case Level::Lo: return "lo";
  }
  return "?";
}

const OpCost& CostLedger::price(OpKind op, Level level) const {
  if (op == OpKind::Inspect) {
    if (level == Level::Full) return model_.full_inspect;
    if (level == Level::Lo) return model_.lo_inspect;
    throw Error("no HI-level inspect operation");
  }
  if (level == Level::Full) return model_.full_label;
  if (level == Level::Hi) return model_.hi_label;
  return model_.lo_label;
}

double CostLedger::charge(OpKind op, Level level, std::size_t length) {
  const double c = price(op, level).charge(length);
  record(op, level, c, 1);
  return c;
}

void CostLedger::record(OpKind op, Level level, double cost, long count) {
  if (cost < 0.0) throw Error("negative expert cost");
  const int s = slot(op, level);
  cost_[s] += cost;
  count_[s] += count;
  total_ += cost;
  if (!rows_.empty() && rows_.back().episode == episode_ && rows_.back().op == op &&
      rows_.back().level == level) {
    rows_.back().count += count;
    rows_.back().cost += cost;
    rows_.back().cumulative_cost = total_;
    return;
  }
  rows_.push_back({episode_, op, level, count, cost, total_});
}

double CostLedger::inspect_cost() const {
  return cost(OpKind::Inspect, Level::Full) + cost(OpKind::Inspect, Level::Lo);
}

double CostLedger::label_cost() const {
  return cost(OpKind::Label, Level::Full) + cost(OpKind::Label, Level::Hi) +
         cost(OpKind::Label, Level::Lo);
}

std::string CostLedger::to_csv() const {
  std::ostringstream out;
  out << "episode,op_kind,level,count,cost,cumulative_cost\n";
  for (const auto& r : rows_) {
    out << r.episode << ',' << to_string(r.op) << ',' << to_string(r.level) << ',' << r.count
        << ',' << fmt_num(r.cost) << ',' << fmt_num(r.cumulative_cost) << '\n';
  }
  return out.str();
}

}  // namespace hierg
