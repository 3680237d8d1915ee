#include "hierg/learners.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace hierg::learn {

void LabeledDataset::append(Features x, int label) {
  std::sort(x.begin(), x.end());
  ++size_;
  auto key = std::make_pair(x, label);
  auto it = index_.find(key);
  if (it != index_.end()) {
    counts_[it->second] += 1.0;
    return;
  }
  index_.emplace(std::move(key), rows_.size());
  rows_.push_back({std::move(x), label});
  counts_.push_back(1.0);
}

void LabeledDataset::append(const LabeledDataset& other) {
  for (std::size_t i = 0; i < other.rows_.size(); ++i)
    for (int k = 0; k < static_cast<int>(other.counts_[i]); ++k)
      append(other.rows_[i].x, other.rows_[i].label);
}

Classifier::Classifier(int num_features, int num_classes, ClassifierParams params)
    : num_features_(num_features),
      num_classes_(num_classes),
      params_(params),
      w_(static_cast<std::size_t>(num_features + 1) * num_classes, 0.0) {
  if (num_features < 0 || num_classes < 1) throw Error("classifier: bad dimensions");
}

std::vector<double> Classifier::scores(const Features& x) const {
  std::vector<double> s(num_classes_);
  for (int c = 0; c < num_classes_; ++c) s[c] = w(c, num_features_);
  for (std::uint32_t f : x) {
    if (f >= static_cast<std::uint32_t>(num_features_)) throw Error("classifier: feature out of range");
    for (int c = 0; c < num_classes_; ++c) s[c] += w(c, f);
  }
  return s;
}

int Classifier::predict(const Features& x) const {
  const auto s = scores(x);
  return static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
}

namespace {

// Softmax in place; returns log-sum-exp.
double softmax(std::vector<double>& s) {
  const double m = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (double& v : s) {
    v = std::exp(v - m);
    z += v;
  }
  for (double& v : s) v /= z;
  return m + std::log(z);
}

}  // namespace

double Classifier::loss(const LabeledDataset& data) const {
  if (data.empty()) throw EmptyDataset("classifier: empty dataset");
  double total = 0.0;
  for (std::size_t i = 0; i < data.rows().size(); ++i) {
    auto s = scores(data.rows()[i].x);
    const double correct = s[data.rows()[i].label];
    total += data.counts()[i] * (softmax(s) - correct);
  }
  double reg = 0.0;
  for (double v : w_) reg += v * v;
  return total / static_cast<double>(data.size()) + 0.5 * params_.l2 * reg;
}

std::vector<double> Classifier::train(const LabeledDataset& data) {
  return train(data, params_.epochs);
}

std::vector<double> Classifier::train(const LabeledDataset& data, int epochs) {
  if (data.empty()) throw EmptyDataset("classifier: empty dataset");
  // Hessian of the softmax loss w.r.t. the logits is bounded by I, so the
  // loss is (max active features + bias + l2)-smooth.
  std::size_t max_nnz = 0;
  for (const auto& row : data.rows()) {
    max_nnz = std::max(max_nnz, row.x.size());
    if (row.label < 0 || row.label >= num_classes_) throw Error("classifier: label out of range");
  }
  const double lr = 1.0 / (static_cast<double>(max_nnz + 1) + params_.l2);
  const double n = static_cast<double>(data.size());
  std::vector<double> grad(w_.size());
  std::vector<double> history;
  history.reserve(epochs);
  for (int e = 0; e < epochs; ++e) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < data.rows().size(); ++i) {
      const Example& row = data.rows()[i];
      auto p = scores(row.x);
      softmax(p);
      p[row.label] -= 1.0;
      const double k = data.counts()[i] / n;
      auto add = [&](std::uint32_t f) {
        double* g = &grad[static_cast<std::size_t>(f) * num_classes_];
        for (int c = 0; c < num_classes_; ++c) g[c] += k * p[c];
      };
      for (std::uint32_t f : row.x) add(f);
      add(static_cast<std::uint32_t>(num_features_));
    }
    for (std::size_t j = 0; j < w_.size(); ++j) w_[j] -= lr * (grad[j] + params_.l2 * w_[j]);
    history.push_back(loss(data));
  }
  return history;
}

nlohmann::json Classifier::to_json() const {
  return {{"kind", "linear"},
          {"num_features", num_features_},
          {"num_classes", num_classes_},
          {"epochs", params_.epochs},
          {"l2", params_.l2},
          {"weights", w_}};
}

Classifier Classifier::from_json(const nlohmann::json& j) {
  Classifier c(j.at("num_features").get<int>(), j.at("num_classes").get<int>(),
               {j.at("epochs").get<int>(), j.at("l2").get<double>()});
  auto w = j.at("weights").get<std::vector<double>>();
  if (w.size() != c.w_.size()) throw ParseError("classifier checkpoint: weight count mismatch");
  c.w_ = std::move(w);
  return c;
}

VersionSpace::VersionSpace(std::vector<std::vector<int>> policies, int num_labels)
    : policies_(std::move(policies)), num_labels_(num_labels) {
  if (policies_.empty()) throw EmptyVersionSpace("version space: empty class");
  alive_.resize(policies_.size());
  for (std::size_t i = 0; i < alive_.size(); ++i) alive_[i] = static_cast<int>(i);
}

int VersionSpace::predict(int input) const {
  if (alive_.empty()) throw EmptyVersionSpace("version space: no policy left");
  std::vector<std::size_t> votes(num_labels_, 0);
  for (int p : alive_) ++votes[policies_[p].at(input)];
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

bool VersionSpace::update(int input, int label) {
  const bool mistake = predict(input) != label;
  std::vector<int> keep;
  keep.reserve(alive_.size());
  for (int p : alive_)
    if (policies_[p].at(input) == label) keep.push_back(p);
  if (keep.empty()) throw RealizabilityViolated("version space: every policy contradicts the label");
  if (mistake) {
    ++mistakes_;
    mistake_log_.emplace_back(alive_.size(), keep.size());
  }
  alive_ = std::move(keep);
  return mistake;
}

bool VersionSpace::contains(int policy) const {
  return std::binary_search(alive_.begin(), alive_.end(), policy);
}

double QTable::lookup(const Table& t, std::uint64_t s, int a) const {
  auto it = t.find(s);
  return it == t.end() ? 0.0 : it->second[a];
}

std::vector<double>& QTable::row(Table& t, std::uint64_t s) {
  auto it = t.find(s);
  if (it == t.end()) it = t.emplace(s, std::vector<double>(params_.num_actions, 0.0)).first;
  return it->second;
}

int QTable::argmax(const Table& t, std::uint64_t s) const {
  auto it = t.find(s);
  if (it == t.end()) return 0;
  const auto& r = it->second;
  return static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
}

double QTable::value(std::uint64_t s, int a) const {
  return 0.5 * (lookup(qa_, s, a) + lookup(qb_, s, a));
}

int QTable::greedy(std::uint64_t s) const {
  int best = 0;
  double best_v = value(s, 0);
  for (int a = 1; a < params_.num_actions; ++a) {
    const double v = value(s, a);
    if (v > best_v) {
      best_v = v;
      best = a;
    }
  }
  return best;
}

int QTable::greedy(std::uint64_t s, Rng& rng) const {
  double best_v = value(s, 0);
  int ties = 1, best = 0;
  for (int a = 1; a < params_.num_actions; ++a) {
    const double v = value(s, a);
    if (v > best_v) {
      best_v = v;
      best = a;
      ties = 1;
    } else if (v == best_v && rng.below(++ties) == 0) {
      best = a;
    }
  }
  return best;
}

double QTable::update(const Transition& t, double weight) {
  if (params_.target_period > 0 && updates_ % params_.target_period == 0) {
    target_a_ = qa_;
    target_b_ = qb_;
  }
  const bool use_a = ((updates_ % 2) == 0) != start_with_b_;
  ++updates_;
  Table& learn = use_a ? qa_ : qb_;
  const Table& other = params_.target_period > 0 ? (use_a ? target_b_ : target_a_)
                                                 : (use_a ? qb_ : qa_);
  double target = t.r;
  if (!t.done) target += params_.gamma * lookup(other, t.s2, argmax(learn, t.s2));
  double& q = row(learn, t.s)[t.a];
  const double td = target - q;
  q += params_.alpha * weight * td;
  return td;
}

void QTable::backup(const Transition& t) {
  double target = t.r;
  if (!t.done) {
    double best = value(t.s2, 0);
    for (int a = 1; a < params_.num_actions; ++a) best = std::max(best, value(t.s2, a));
    target += params_.gamma * best;
  }
  for (Table* table : {&qa_, &qb_}) {
    double& q = row(*table, t.s)[t.a];
    q += params_.alpha * (target - q);
  }
}

std::uint64_t QTable::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ull;
    }
  };
  for (const Table* t : {&qa_, &qb_}) {
    std::vector<std::uint64_t> keys;
    for (const auto& [k, v] : *t) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    for (auto k : keys) {
      mix(&k, sizeof k);
      const auto& v = t->at(k);
      mix(v.data(), v.size() * sizeof(double));
    }
  }
  return h;
}

nlohmann::json QTable::to_json() const {
  auto dump = [](const Table& t) {
    std::vector<std::uint64_t> keys;
    for (const auto& [k, v] : t) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    nlohmann::json rows = nlohmann::json::array();
    for (auto k : keys) rows.push_back({k, t.at(k)});
    return rows;
  };
  return {{"kind", "double_q"},
          {"num_actions", params_.num_actions},
          {"alpha", params_.alpha},
          {"gamma", params_.gamma},
          {"target_period", params_.target_period},
          {"updates", updates_},
          {"start_with_b", start_with_b_},
          {"a", dump(qa_)},
          {"b", dump(qb_)}};
}

QTable QTable::from_json(const nlohmann::json& j) {
  QTable q({j.at("num_actions").get<int>(), j.at("alpha").get<double>(),
            j.at("gamma").get<double>(), j.at("target_period").get<int>()});
  q.updates_ = j.at("updates").get<long>();
  q.start_with_b_ = j.at("start_with_b").get<bool>();
  auto load = [&](const nlohmann::json& rows, Table& t) {
    for (const auto& r : rows) {
      auto v = r.at(1).get<std::vector<double>>();
      if (static_cast<int>(v.size()) != q.params_.num_actions)
        throw ParseError("q checkpoint: row width mismatch");
      t.emplace(r.at(0).get<std::uint64_t>(), std::move(v));
    }
  };
  load(j.at("a"), q.qa_);
  load(j.at("b"), q.qb_);
  // The snapshot is not persisted; a resumed table refreshes it on the next
  // period boundary and reads the live tables until then.
  q.target_a_ = q.qa_;
  q.target_b_ = q.qb_;
  return q;
}

ReplayBuffer::ReplayBuffer(ReplayParams params) : params_(params) {
  if (params_.capacity == 0) throw Error("replay: zero capacity");
  data_.resize(params_.capacity);
  while (tree_size_ < params_.capacity) tree_size_ *= 2;
  tree_.assign(2 * tree_size_, 0.0);
  armed_ = !params_.arm_on_first_positive;
}

bool ReplayBuffer::add(const Transition& t) {
  if (!armed_) {
    if (!(t.r > 0.0)) return false;
    armed_ = true;
  }
  data_[next_] = t;
  set_priority(next_, max_priority_);
  next_ = (next_ + 1) % params_.capacity;
  size_ = std::min(size_ + 1, params_.capacity);
  return true;
}

std::size_t ReplayBuffer::add_segment(const std::vector<Transition>& ts) {
  if (!armed_ && std::none_of(ts.begin(), ts.end(), [](const Transition& t) { return t.r > 0.0; }))
    return 0;
  armed_ = true;
  for (const Transition& t : ts) add(t);
  return ts.size();
}

void ReplayBuffer::set_priority(std::size_t i, double p) {
  std::size_t n = leaf(i);
  const double v = params_.prioritized ? std::pow(p, params_.alpha) : 1.0;
  const double delta = v - tree_[n];
  for (; n >= 1; n /= 2) tree_[n] += delta;
}

std::size_t ReplayBuffer::find(double mass) const {
  std::size_t n = 1;
  while (n < tree_size_) {
    if (mass < tree_[2 * n] || tree_[2 * n + 1] <= 0.0) {
      n = 2 * n;
    } else {
      mass -= tree_[2 * n];
      n = 2 * n + 1;
    }
  }
  return std::min(n - tree_size_, size_ - 1);
}

double ReplayBuffer::beta() const {
  if (params_.beta_steps <= 0) return 1.0;
  const double f = std::min(1.0, static_cast<double>(samples_) / params_.beta_steps);
  return params_.beta0 + (1.0 - params_.beta0) * f;
}

Sample ReplayBuffer::sample(std::size_t batch, Rng& rng) {
  if (size_ == 0) throw BufferEmpty("replay: sample from empty buffer");
  Sample out;
  out.index.reserve(batch);
  out.weight.reserve(batch);
  if (!params_.prioritized) {
    for (std::size_t k = 0; k < batch; ++k) {
      out.index.push_back(rng.below(size_));
      out.weight.push_back(1.0);
    }
    ++samples_;
    return out;
  }
  const double total = tree_[1];
  const double b = beta();
  double max_w = 0.0;
  for (std::size_t k = 0; k < batch; ++k) {
    const std::size_t i = find(rng.uniform() * total);
    const double p = tree_[leaf(i)] / total;
    const double w = std::pow(static_cast<double>(size_) * p, -b);
    out.index.push_back(i);
    out.weight.push_back(w);
    max_w = std::max(max_w, w);
  }
  for (double& w : out.weight) w /= max_w;
  ++samples_;
  return out;
}

void ReplayBuffer::update_priorities(const Sample& s, const std::vector<double>& td_errors) {
  for (std::size_t k = 0; k < s.index.size(); ++k) {
    const double p = std::abs(td_errors[k]) + params_.priority_floor;
    max_priority_ = std::max(max_priority_, p);
    set_priority(s.index[k], p);
  }
}

void ReplayQLearner::learn(Rng& rng) {
  Sample s = buffer_.sample(batch_, rng);
  std::vector<double> td(s.index.size());
  for (std::size_t k = 0; k < s.index.size(); ++k)
    td[k] = q_.update(buffer_.at(s.index[k]), s.weight[k]);
  buffer_.update_priorities(s, td);
}

bool FreezeLatch::record(bool success) {
  recent_.push_back(success);
  hits_ += success;
  if (static_cast<int>(recent_.size()) > window_) {
    hits_ -= recent_.front();
    recent_.pop_front();
  }
  if (static_cast<int>(recent_.size()) == window_ && rate() > threshold_) frozen_ = true;
  return frozen_;
}

double FreezeLatch::rate() const {
  return recent_.empty() ? 0.0 : static_cast<double>(hits_) / static_cast<double>(recent_.size());
}

}  // namespace hierg::learn
