#ifndef HIERG_ALGORITHMS_HPP_
#define HIERG_ALGORITHMS_HPP_

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hierg/chain_env.hpp"
#include "hierg/cost.hpp"
#include "hierg/expert.hpp"
#include "hierg/features.hpp"
#include "hierg/learners.hpp"
#include "hierg/maze_env.hpp"

namespace hierg::algo {

enum class Algorithm { HBC, HgDagger, HgDaggerQ, FlatBC, FlatDagger, FlatQ, HDQN };
enum class EnvKind { Maze, Chain };

const char* to_string(Algorithm a);
const char* to_string(EnvKind e);
std::optional<Algorithm> parse_algorithm(std::string_view s);
std::optional<EnvKind> parse_env(std::string_view s);

// LO-level reinforcement learning shared by hg-DAgger/Q, h-DQN and flat Q.
struct RlParams {
  double alpha = 0.5;
  double gamma = 0.99;
  int target_period = 2000;
  learn::ReplayParams replay;
  std::size_t batch = 32;
  int train_every = 4;  // one minibatch per this many fed transitions
  learn::EpsilonSchedule epsilon;
  double freeze_threshold = 0.90;
  int freeze_window = 100;
  int lo_cap = 0;  // LO steps per segment; 0 picks the environment default
};

// Tabular meta-controller of h-DQN.
struct MetaRlParams {
  double alpha = 0.1;
  double gamma = 0.99;
  learn::EpsilonSchedule epsilon{1.0, 0.05, 2000};
};

inline constexpr int kChainLoCap = 300;

struct RunConfig {
  Algorithm algorithm = Algorithm::HgDagger;
  EnvKind env = EnvKind::Maze;
  int episodes = 3000;
  int warm_start = 50;
  std::uint64_t seed = 0;
  CostModel costs = CostModel::standard();

  // Maze pools: training mazes are drawn uniformly per episode; after every
  // training episode one test maze (cycling) is attempted without the expert.
  std::uint64_t pool_seed = 0;
  int train_mazes = 1000;
  int test_mazes = 100;
  int min_dist = maze::kDefaultMinDist;
  maze::Horizons horizons;
  learn::ClassifierParams classifier;

  RlParams rl;
  MetaRlParams meta;
  long lo_step_budget = 0;  // stop after this many executed LO steps; 0 = no limit
  double head_start = 0.0;  // h-DQN: fraction of the optimal path replayed first
  bool stop_when_solved = false;
  int window = 100;

  // Embedded verbatim in every output.
  std::string config_hash = "0000000000000000";
};

std::vector<std::string> subgoal_names(EnvKind env);

struct EpisodeMetrics {
  int episode = 0;
  bool success = false;        // maze: test episode; chain: the training episode
  bool train_success = false;
  double external_reward = 0.0;
  double trailing_success = 0.0;
  double trailing_reward = 0.0;
  long lo_steps = 0;  // cumulative executed LO steps in training episodes
  double hi_label_cost = 0.0;
  double lo_label_cost = 0.0;
  double full_label_cost = 0.0;
  double inspect_cost = 0.0;
  double total_cost = 0.0;
  std::size_t hi_labels = 0;  // labeled HI states acquired so far
  std::vector<double> subgoal_success;  // trailing success per subgoal
  std::vector<bool> frozen;
};

class MetricsLog {
 public:
  MetricsLog() = default;
  MetricsLog(const RunConfig& cfg, std::vector<std::string> subgoals);

  void add(EpisodeMetrics m);
  const std::vector<EpisodeMetrics>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const EpisodeMetrics& back() const { return rows_.back(); }

  std::string to_csv() const;
  static std::string csv_header(const std::vector<std::string>& subgoals);

 private:
  std::string preamble_;
  std::vector<std::string> subgoals_;
  std::vector<EpisodeMetrics> rows_;
};

// Element t is the mean of xs over the last `window` entries ending at t.
std::vector<double> trailing_mean(const std::vector<double>& xs, int window);
std::vector<double> trailing_success(const MetricsLog& log, int window = 100);

struct RunResult {
  MetricsLog log;
  CostLedger ledger;
  nlohmann::json checkpoint;
  std::size_t hi_dataset = 0;
  std::vector<std::size_t> lo_datasets;
  bool stopped_early = false;
};

// Optional instrumentation hooks.
struct Observer {
  std::function<void(const EpisodeMetrics&)> on_episode;
  // hg-DAgger executed the learner's episode, before any expert feedback.
  std::function<void(int episode, const expert::HierTrajectory&)> on_maze_rollout;
  // A segment's transitions were handed to subgoal g's learner.
  std::function<void(const maze::MazeSpec&, const maze::MazeState& entry, maze::Subgoal g)> on_maze_feed;
  std::function<void(const chain::ChainState& entry, int g)> on_chain_feed;
  // Fingerprints of the LO Q-tables after each training episode.
  std::function<void(int episode, const std::vector<std::uint64_t>&)> on_q_tables;
  // Polled between episodes; returning true ends the run.
  std::function<bool()> cancelled;
};

// Hierarchical imitation policy for the maze: meta classifier over subgoals and
// one classifier per subgoal whose classes pack (action, termination).
class MazeHierPolicy {
 public:
  explicit MazeHierPolicy(learn::ClassifierParams params = {});

  maze::Subgoal choose(const features::MazeView& view, const maze::MazeState& s) const;
  std::pair<maze::Action, bool> act(const features::MazeView& view, const maze::MazeState& entry,
                                    const maze::MazeState& s, maze::Subgoal g) const;
  // Segments end on predicted termination, a room change, an episode end or
  // the LO cap.
  expert::HierTrajectory execute(const features::MazeView& view, const maze::Horizons& h) const;

  // Retrains the levels whose datasets grew since the last fit.
  void fit(const learn::LabeledDataset& hi, const std::array<learn::LabeledDataset, maze::kNumSubgoals>& lo);

  nlohmann::json to_json() const;

 private:
  learn::Classifier meta_;
  std::array<learn::Classifier, maze::kNumSubgoals> lo_;
  std::size_t meta_fit_ = 0;
  std::array<std::size_t, maze::kNumSubgoals> lo_fit_{};
};

class MazeFlatPolicy {
 public:
  explicit MazeFlatPolicy(learn::ClassifierParams params = {});
  maze::Action act(const features::MazeView& view, const maze::MazeState& s) const;
  expert::Trajectory execute(const features::MazeView& view) const;
  void fit(const learn::LabeledDataset& data);
  nlohmann::json to_json() const;

 private:
  learn::Classifier clf_;
  std::size_t fit_ = 0;
};

// Outcome of hg-DAgger's feedback on one learner episode.
struct HgFeedback {
  bool passed = false;
  std::vector<maze::Subgoal> hi_labels;  // one per segment; empty on Pass
  int lo_inspections = 0;
  int labeled_segment = -1;
  std::vector<expert::LoLabel> lo_labels;
};

// Inspect the episode; on failure label the HI trajectory, then scan segments
// while the learner's subgoal agrees with the expert, inspecting each and
// labeling the first failing one.
HgFeedback hg_dagger_feedback(expert::Expert& ex, const maze::MazeSpec& spec,
                              const expert::HierTrajectory& sigma, CostLedger& ledger);

// Deterministic maze pools shared by every algorithm with the same pool seed.
class MazePool {
 public:
  MazePool(std::uint64_t pool_seed, int size, std::uint64_t stream, int min_dist);
  int size() const { return size_; }
  const features::MazeView& at(int i);

 private:
  std::uint64_t pool_seed_;
  int size_;
  std::uint64_t stream_;
  int min_dist_;
  std::vector<std::unique_ptr<features::MazeView>> cache_;
};

// Runs the configured driver. Maze imitation and hg-DAgger/Q query `ex`, or a
// synthetic expert when null.
RunResult run(const RunConfig& cfg, expert::Expert* ex = nullptr, const Observer* obs = nullptr);

}  // namespace hierg::algo

#endif  // HIERG_ALGORITHMS_HPP_
