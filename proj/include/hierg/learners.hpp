#ifndef HIERG_LEARNERS_HPP_
#define HIERG_LEARNERS_HPP_

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "hierg/common.hpp"

namespace hierg::learn {

// Binary sparse features: the indices of active (value 1) inputs.
using Features = std::vector<std::uint32_t>;

struct Example {
  Features x;
  int label = 0;
};

// Append-only aggregate of labeled examples. Duplicate rows are counted so
// training cost scales with distinct rows rather than total appends.
class LabeledDataset {
 public:
  void append(Features x, int label);
  void append(const LabeledDataset& other);

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  std::size_t distinct() const { return rows_.size(); }
  // Distinct rows with multiplicities, in first-insertion order.
  const std::vector<Example>& rows() const { return rows_; }
  const std::vector<double>& counts() const { return counts_; }

 private:
  std::vector<Example> rows_;
  std::vector<double> counts_;
  std::map<std::pair<Features, int>, std::size_t> index_;
  std::size_t size_ = 0;
};

struct ClassifierParams {
  int epochs = 50;
  double l2 = 1e-4;
};

// Multinomial linear scorer over binary sparse features. Training is
// full-batch gradient descent on the weighted cross-entropy with step size
// bounded by the inverse smoothness constant, so the loss never increases.
class Classifier {
 public:
  Classifier() = default;
  Classifier(int num_features, int num_classes, ClassifierParams params = {});

  int num_features() const { return num_features_; }
  int num_classes() const { return num_classes_; }

  std::vector<double> scores(const Features& x) const;
  // Argmax of scores; the lowest class wins ties.
  int predict(const Features& x) const;
  double loss(const LabeledDataset& data) const;

  // Continues from the current weights. Returns the loss after each epoch.
  std::vector<double> train(const LabeledDataset& data);
  std::vector<double> train(const LabeledDataset& data, int epochs);

  const std::vector<double>& weights() const { return w_; }

  nlohmann::json to_json() const;
  static Classifier from_json(const nlohmann::json& j);

 private:
  double& w(int c, std::uint32_t f) { return w_[static_cast<std::size_t>(f) * num_classes_ + c]; }
  double w(int c, std::uint32_t f) const {
    return w_[static_cast<std::size_t>(f) * num_classes_ + c];
  }

  int num_features_ = 0;
  int num_classes_ = 0;
  ClassifierParams params_;
  std::vector<double> w_;  // feature-major; feature 0..n-1, then bias row
};

// Halving learner over an explicitly enumerated finite class. Each policy is
// a lookup table from input index to label.
class VersionSpace {
 public:
  VersionSpace(std::vector<std::vector<int>> policies, int num_labels);

  int predict(int input) const;
  // Removes policies that disagree with `label`. Returns whether the
  // majority prediction was wrong (a counted mistake).
  bool update(int input, int label);

  std::size_t size() const { return alive_.size(); }
  std::size_t class_size() const { return policies_.size(); }
  int mistakes() const { return mistakes_; }
  const std::vector<int>& alive() const { return alive_; }
  bool contains(int policy) const;
  // |alive| before and after each counted mistake.
  const std::vector<std::pair<std::size_t, std::size_t>>& mistake_log() const {
    return mistake_log_;
  }

 private:
  std::vector<std::vector<int>> policies_;
  int num_labels_;
  std::vector<int> alive_;
  int mistakes_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> mistake_log_;
};

struct Transition {
  std::uint64_t s = 0;
  int a = 0;
  double r = 0.0;
  std::uint64_t s2 = 0;
  bool done = false;

  friend bool operator==(const Transition&, const Transition&) = default;
};

struct QParams {
  int num_actions = 4;
  double alpha = 0.1;
  double gamma = 0.99;
  // Bootstrap targets read a snapshot refreshed every this many updates;
  // 0 reads the live tables.
  int target_period = 2000;
};

// Tabular double Q-learning. Each update selects the next action with one
// table and evaluates it with the other; the roles alternate per update.
class QTable {
 public:
  QTable() = default;
  explicit QTable(QParams params) : params_(params) {}

  const QParams& params() const { return params_; }

  double value(std::uint64_t s, int a) const;  // mean of the two estimates
  double value_a(std::uint64_t s, int a) const { return lookup(qa_, s, a); }
  double value_b(std::uint64_t s, int a) const { return lookup(qb_, s, a); }
  // First maximizing action of the combined estimate.
  int greedy(std::uint64_t s) const;
  // Maximizing action with ties broken uniformly at random.
  int greedy(std::uint64_t s, Rng& rng) const;

  // Returns the TD error of the updated table. `weight` scales the step
  // (importance correction).
  double update(const Transition& t, double weight = 1.0);
  // Moves both tables toward r + gamma * max of the live combined estimate at
  // s2. Sweeping a trajectory backwards with this chains a terminal reward
  // through every step in one pass.
  void backup(const Transition& t);

  long updates() const { return updates_; }
  std::size_t size() const { return qa_.size(); }
  void swap_roles() { start_with_b_ = !start_with_b_; }
  std::uint64_t fingerprint() const;

  nlohmann::json to_json() const;
  static QTable from_json(const nlohmann::json& j);

 private:
  using Table = std::unordered_map<std::uint64_t, std::vector<double>>;
  double lookup(const Table& t, std::uint64_t s, int a) const;
  std::vector<double>& row(Table& t, std::uint64_t s);
  int argmax(const Table& t, std::uint64_t s) const;

  QParams params_;
  Table qa_, qb_;
  Table target_a_, target_b_;
  long updates_ = 0;
  bool start_with_b_ = false;
};

struct ReplayParams {
  std::size_t capacity = 50000;
  bool prioritized = true;
  double alpha = 0.6;
  double beta0 = 0.4;
  long beta_steps = 100000;  // samples over which beta anneals to 1
  double priority_floor = 1e-6;
  bool arm_on_first_positive = true;
};

struct Sample {
  std::vector<std::size_t> index;
  std::vector<double> weight;
};

// Ring buffer with optional proportional prioritization (sum tree).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(ReplayParams params = {});

  const ReplayParams& params() const { return params_; }
  bool armed() const { return armed_; }
  std::size_t size() const { return size_; }
  const Transition& at(std::size_t i) const { return data_[i]; }

  // Stores t, or drops it while the buffer waits for its first positive
  // reward. Returns whether it was stored.
  bool add(const Transition& t);
  // Stores a whole segment. An unarmed buffer takes it only if some
  // transition in it is positive, and then arms. Returns the count stored.
  std::size_t add_segment(const std::vector<Transition>& ts);

  Sample sample(std::size_t batch, Rng& rng);
  void update_priorities(const Sample& s, const std::vector<double>& td_errors);
  double beta() const;
  double priority(std::size_t i) const { return tree_[leaf(i)]; }

 private:
  std::size_t leaf(std::size_t i) const { return i + tree_size_; }
  void set_priority(std::size_t i, double p);
  std::size_t find(double mass) const;

  ReplayParams params_;
  std::vector<Transition> data_;
  std::vector<double> tree_;  // stores p_i^alpha; internal nodes hold sums
  std::size_t tree_size_ = 1;
  std::size_t size_ = 0;
  std::size_t next_ = 0;
  double max_priority_ = 1.0;
  long samples_ = 0;
  bool armed_ = false;
};

// Linear exploration schedule from `start` to `end` over `steps`.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  long steps = 20000;

  double at(long t) const {
    if (t >= steps) return end;
    return start + (end - start) * static_cast<double>(t) / static_cast<double>(steps);
  }
};

// Latches once the success rate over a full trailing window exceeds the
// threshold.
class FreezeLatch {
 public:
  explicit FreezeLatch(int window = 100, double threshold = 0.90) : window_(window), threshold_(threshold) {}

  bool record(bool success);  // returns frozen()
  bool frozen() const { return frozen_; }
  double rate() const;

 private:
  std::deque<bool> recent_;
  int window_;
  double threshold_;
  int hits_ = 0;
  bool frozen_ = false;
};

// Double-Q learner fed from its own replay buffer.
class ReplayQLearner {
 public:
  ReplayQLearner(QParams q, ReplayParams replay, std::size_t batch = 32)
      : q_(q), buffer_(replay), batch_(batch) {}

  QTable& q() { return q_; }
  const QTable& q() const { return q_; }
  ReplayBuffer& buffer() { return buffer_; }
  const ReplayBuffer& buffer() const { return buffer_; }

  // One minibatch of updates. Throws BufferEmpty when nothing is stored.
  void learn(Rng& rng);

 private:
  QTable q_;
  ReplayBuffer buffer_;
  std::size_t batch_;
};

}  // namespace hierg::learn

#endif  // HIERG_LEARNERS_HPP_
