#ifndef HIERG_SRC_ALGO_COMMON_HPP_
#define HIERG_SRC_ALGO_COMMON_HPP_

#include <deque>

#include "hierg/algorithms.hpp"

namespace hierg::algo::detail {

// Sliding success window per subgoal.
class SubgoalWindows {
 public:
  SubgoalWindows(int n, int window) : windows_(n), window_(window) {}
  void add(int g, bool ok) {
    auto& w = windows_[g];
    w.push_back(ok);
    if (static_cast<int>(w.size()) > window_) w.pop_front();
  }
  double rate(int g) const {
    const auto& w = windows_[g];
    if (w.empty()) return 0.0;
    int n = 0;
    for (bool ok : w) n += ok;
    return static_cast<double>(n) / static_cast<double>(w.size());
  }
  bool full(int g) const { return static_cast<int>(windows_[g].size()) >= window_; }
  std::vector<double> rates() const {
    std::vector<double> out;
    for (int g = 0; g < static_cast<int>(windows_.size()); ++g) out.push_back(rate(g));
    return out;
  }

 private:
  std::vector<std::deque<bool>> windows_;
  int window_;
};

// Accumulates per-episode outcomes into the metrics log.
class Recorder {
 public:
  Recorder(const RunConfig& cfg, const CostLedger& ledger, const Observer* obs)
      : cfg_(cfg), ledger_(ledger), obs_(obs), log_(cfg, subgoal_names(cfg.env)) {}

  bool cancelled() const { return obs_ && obs_->cancelled && obs_->cancelled(); }

  void add_lo_steps(long n) { lo_steps_ += n; }
  long lo_steps() const { return lo_steps_; }
  bool budget_spent() const { return cfg_.lo_step_budget > 0 && lo_steps_ >= cfg_.lo_step_budget; }

  const EpisodeMetrics& record(int episode, bool success, bool train_success, double reward,
                               std::size_t hi_labels, std::vector<double> subgoal_success,
                               std::vector<bool> frozen);

  double trailing_reward() const { return log_.empty() ? 0.0 : log_.back().trailing_reward; }
  bool window_full() const { return static_cast<int>(reward_.size()) >= cfg_.window; }
  MetricsLog take() { return std::move(log_); }

 private:
  const RunConfig& cfg_;
  const CostLedger& ledger_;
  const Observer* obs_;
  MetricsLog log_;
  std::deque<double> success_, reward_;
  long lo_steps_ = 0;
};

nlohmann::json checkpoint_header(const RunConfig& cfg, int episodes_run);

RunResult run_maze_imitation(const RunConfig& cfg, expert::Expert& ex, const Observer* obs);
RunResult run_maze_rl(const RunConfig& cfg, expert::Expert& ex, const Observer* obs);
RunResult run_chain(const RunConfig& cfg, const Observer* obs);

}  // namespace hierg::algo::detail

#endif  // HIERG_SRC_ALGO_COMMON_HPP_
