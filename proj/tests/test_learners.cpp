#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <set>

#include "doctest.h"
#include "hierg/learners.hpp"

using namespace hierg;
using namespace hierg::learn;

namespace {

double chi2_pvalue(const std::vector<double>& observed, const std::vector<double>& expected) {
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i)
    stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
  boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

// Frequencies of 10^5 single-index draws from a buffer whose i-th entry has
// priority p[i].
std::vector<double> draw_counts(const std::vector<double>& p, double alpha, std::uint64_t seed) {
  ReplayParams params;
  params.capacity = p.size();
  params.alpha = alpha;
  params.arm_on_first_positive = false;
  ReplayBuffer buf(params);
  Sample all;
  std::vector<double> td;
  for (std::size_t i = 0; i < p.size(); ++i) {
    buf.add({i, 0, 0.0, i, true});
    all.index.push_back(i);
    td.push_back(p[i] - params.priority_floor);
  }
  buf.update_priorities(all, td);
  Rng rng(seed);
  std::vector<double> counts(p.size(), 0.0);
  for (int k = 0; k < 100000; ++k) counts[buf.sample(1, rng).index[0]] += 1.0;
  return counts;
}

}  // namespace

TEST_CASE("dataset aggregation counts duplicates") {
  LabeledDataset d;
  d.append({3, 1}, 2);
  d.append({1, 3}, 2);
  d.append({1, 3}, 0);
  CHECK(d.size() == 3);
  CHECK(d.distinct() == 2);
  CHECK(d.counts()[0] == 2.0);
  LabeledDataset e;
  e.append(d);
  CHECK(e.size() == 3);
}

TEST_CASE("classifier memorizes a single example") {
  Classifier c(10, 4);
  LabeledDataset d;
  d.append({7}, 2);
  c.train(d);
  CHECK(c.predict({7}) == 2);
  CHECK_THROWS_AS(c.train(LabeledDataset{}), EmptyDataset);
}

TEST_CASE("classifier separates a linearly separable toy set") {
  // Class = whether any of features 0..4 is active; features 5..9 are noise.
  LabeledDataset d;
  Rng rng(3);
  std::vector<Example> all;
  for (int i = 0; i < 200; ++i) {
    Features x;
    const bool positive = i % 2 == 0;
    x.push_back(static_cast<std::uint32_t>((positive ? 0 : 5) + rng.index(5)));
    x.push_back(static_cast<std::uint32_t>(5 + rng.index(5)));
    std::sort(x.begin(), x.end());
    x.erase(std::unique(x.begin(), x.end()), x.end());
    all.push_back({x, positive ? 1 : 0});
    d.append(x, positive ? 1 : 0);
  }
  Classifier c(10, 2, {200, 1e-4});
  const auto history = c.train(d);
  for (std::size_t i = 1; i < history.size(); ++i) CHECK(history[i] <= history[i - 1] + 1e-15);
  int correct = 0;
  for (const auto& e : all) correct += c.predict(e.x) == e.label;
  CHECK(correct == 200);
}

TEST_CASE("classifier training is deterministic and checkpoints round-trip") {
  LabeledDataset d;
  for (int i = 0; i < 30; ++i) d.append({static_cast<std::uint32_t>(i % 7), 7}, i % 3);
  Classifier a(8, 3), b(8, 3);
  a.train(d);
  b.train(d);
  CHECK(a.weights() == b.weights());
  const Classifier c = Classifier::from_json(nlohmann::json::parse(a.to_json().dump()));
  CHECK(c.weights() == a.weights());
  for (std::uint32_t f = 0; f < 7; ++f) CHECK(c.scores({f, 7}) == a.scores({f, 7}));
}

TEST_CASE("halving prediction and tie-break") {
  VersionSpace one({{2, 1}}, 3);
  CHECK(one.predict(0) == 2);
  VersionSpace four({{1}, {1}, {1}, {0}}, 2);
  CHECK(four.predict(0) == 1);
  VersionSpace tie({{1}, {1}, {2}, {2}}, 3);
  CHECK(tie.predict(0) == 1);
}

TEST_CASE("halving update removes erring policies") {
  VersionSpace vs({{1}, {1}, {1}, {0}}, 2);
  CHECK_FALSE(vs.update(0, 1));
  CHECK(vs.mistakes() == 0);
  CHECK(vs.size() == 3);
  CHECK_FALSE(vs.contains(3));

  VersionSpace wrong({{0}, {0}, {0}, {1}}, 2);
  CHECK(wrong.update(0, 1));
  CHECK(wrong.mistakes() == 1);
  CHECK(wrong.size() == 1);
  CHECK_THROWS_AS(wrong.update(0, 0), RealizabilityViolated);
}

TEST_CASE("class of four policies makes at most two mistakes") {
  // All labelings of two binary inputs.
  std::vector<std::vector<int>> cls = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (int target = 0; target < 4; ++target) {
    VersionSpace vs(cls, 2);
    for (int round = 0; round < 5; ++round)
      for (int x = 0; x < 2; ++x) vs.update(x, cls[target][x]);
    CHECK(vs.mistakes() <= 2);
    CHECK(vs.contains(target));
  }
}

TEST_CASE("an adversary forces at most k mistakes on a class of size 2^k") {
  for (int k = 1; k <= 6; ++k) {
    // All 2^k labelings of k inputs.
    std::vector<std::vector<int>> cls(1u << k, std::vector<int>(k));
    for (int p = 0; p < (1 << k); ++p)
      for (int x = 0; x < k; ++x) cls[p][x] = (p >> x) & 1;
    VersionSpace vs(cls, 2);
    // Answer the opposite of the prediction whenever some survivor allows it.
    for (int round = 0; round < 3; ++round) {
      for (int x = 0; x < k; ++x) {
        const int flip = 1 - vs.predict(x);
        bool possible = false;
        for (int p : vs.alive()) possible = possible || cls[p][x] == flip;
        vs.update(x, possible ? flip : 1 - flip);
      }
    }
    CHECK(vs.mistakes() == k);
  }
}

TEST_CASE("mistake bound holds on random classes and streams") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int inputs = 1 + rng.index(8);
    const int labels = 2 + rng.index(3);
    const int size = 1 + rng.index(64);
    std::vector<std::vector<int>> cls(size, std::vector<int>(inputs));
    for (auto& p : cls)
      for (int& v : p) v = rng.index(labels);
    const int target = rng.index(size);
    VersionSpace vs(cls, labels);
    std::size_t prev = vs.size();
    for (int t = 0; t < 40; ++t) {
      const int x = rng.index(inputs);
      vs.update(x, cls[target][x]);
      CHECK(vs.size() <= prev);
      prev = vs.size();
      CHECK(vs.contains(target));
    }
    CHECK(vs.mistakes() <= static_cast<int>(std::ceil(std::log2(size))));
    for (const auto& [before, after] : vs.mistake_log()) CHECK(2 * after <= before);
  }
}

TEST_CASE("double Q converges to discounted returns on a two-state chain") {
  // s0 --a0--> s1 --a0--> end (+1); s0 --a1--> end (0); s1 --a1--> s1 (0).
  const double gamma = 0.9;
  const std::vector<Transition> world = {
      {0, 0, 0.0, 1, false}, {0, 1, 0.0, 0, true}, {1, 0, 1.0, 0, true}, {1, 1, 0.0, 1, false}};
  for (int swap = 0; swap < 2; ++swap) {
    QTable q({2, 0.5, gamma, 50});
    if (swap) q.swap_roles();
    Rng rng(9 + swap);
    for (int i = 0; i < 20000; ++i) q.update(world[rng.index(world.size())]);
    CHECK(std::abs(q.value_a(1, 0) - 1.0) < 1e-6);
    CHECK(std::abs(q.value_b(1, 0) - 1.0) < 1e-6);
    CHECK(std::abs(q.value_a(0, 0) - gamma) < 1e-6);
    CHECK(std::abs(q.value_b(0, 0) - gamma) < 1e-6);
    CHECK(std::abs(q.value(1, 1) - gamma) < 1e-6);
    CHECK(std::abs(q.value(0, 1)) < 1e-6);
    CHECK(q.greedy(0) == 0);
    CHECK(q.greedy(1) == 0);
  }
}

TEST_CASE("zero rewards keep every estimate at zero") {
  QTable q({4, 0.3, 0.99, 2000});
  Rng rng(1);
  for (int i = 0; i < 5000; ++i)
    q.update({rng.below(10), rng.index(4), 0.0, rng.below(10), rng.bernoulli(0.1)});
  for (std::uint64_t s = 0; s < 10; ++s)
    for (int a = 0; a < 4; ++a) CHECK(q.value(s, a) == 0.0);
}

TEST_CASE("Q checkpoints reproduce values") {
  QTable q({3, 0.2, 0.95, 0});
  Rng rng(5);
  for (int i = 0; i < 1000; ++i)
    q.update({rng.below(6), rng.index(3), rng.uniform() - 0.5, rng.below(6), rng.bernoulli(0.2)});
  const QTable back = QTable::from_json(nlohmann::json::parse(q.to_json().dump()));
  CHECK(back.fingerprint() == q.fingerprint());
  for (std::uint64_t s = 0; s < 6; ++s) CHECK(back.greedy(s) == q.greedy(s));
}

TEST_CASE("random tie-break is uniform over maximizing actions") {
  QTable q({4, 1.0, 0.9, 0});
  Rng rng(12);
  std::vector<double> counts(4, 0.0);
  for (int i = 0; i < 40000; ++i) counts[q.greedy(0, rng)] += 1.0;
  CHECK(chi2_pvalue(counts, std::vector<double>(4, 10000.0)) > 0.01);

  // Raise actions 1 and 3 to the same value; only they may be chosen.
  q.update({0, 1, 0.5, 0, true});
  q.update({0, 1, 0.5, 0, true});
  q.update({0, 3, 0.5, 0, true});
  q.update({0, 3, 0.5, 0, true});
  std::vector<double> pair(2, 0.0);
  for (int i = 0; i < 20000; ++i) {
    const int a = q.greedy(0, rng);
    REQUIRE((a == 1 || a == 3));
    pair[a == 3] += 1.0;
  }
  CHECK(chi2_pvalue(pair, {10000.0, 10000.0}) > 0.01);
  CHECK(q.greedy(0) == 1);
}

TEST_CASE("one backward backup sweep carries a terminal reward to the start") {
  // Corridor 0 -> 1 -> ... -> n-1 -> end (+1), always action 2.
  const int n = 12;
  const double alpha = 0.5, gamma = 0.9;
  std::vector<Transition> path;
  for (int i = 0; i < n; ++i)
    path.push_back({static_cast<std::uint64_t>(i), 2, i == n - 1 ? 1.0 : 0.0,
                    static_cast<std::uint64_t>(i + 1), i == n - 1});
  QTable swept({4, alpha, gamma, 2000});
  for (auto it = path.rbegin(); it != path.rend(); ++it) swept.backup(*it);
  for (int i = 0; i < n; ++i) {
    // k steps before the end: alpha^(k+1) * gamma^k in both tables.
    const int k = n - 1 - i;
    const double expect = std::pow(alpha, k + 1) * std::pow(gamma, k);
    CHECK(swept.value_a(i, 2) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(swept.value_b(i, 2) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(swept.greedy(i) == 2);
  }
  CHECK(swept.updates() == 0);

  // The same sweep through snapshot-target updates moves only the last step.
  QTable stale({4, alpha, gamma, 2000});
  for (auto it = path.rbegin(); it != path.rend(); ++it) stale.update(*it);
  CHECK(stale.value(n - 1, 2) > 0.0);
  for (int i = 0; i + 1 < n; ++i) CHECK(stale.value(i, 2) == 0.0);
}

TEST_CASE("segments arm the buffer only when they carry a positive reward") {
  ReplayBuffer buf;
  Rng rng(4);
  for (int seg = 0; seg < 200; ++seg) {
    std::vector<Transition> ts(1 + rng.index(20));
    for (auto& t : ts) t = {rng.below(50), rng.index(8), rng.bernoulli(0.3) ? -1.0 : 0.0, rng.below(50), false};
    CHECK(buf.add_segment(ts) == 0);
  }
  CHECK(buf.size() == 0);
  CHECK_FALSE(buf.armed());

  std::vector<Transition> hit = {{1, 0, 0.0, 2, false}, {2, 0, 0.0, 3, false}, {3, 0, 1.0, 4, true}};
  CHECK(buf.add_segment(hit) == 3);
  CHECK(buf.armed());
  for (std::size_t i = 0; i < 3; ++i) CHECK(buf.at(i) == hit[i]);
  CHECK(buf.add_segment({{5, 1, -1.0, 6, true}, {6, 1, 0.0, 7, false}}) == 2);
  CHECK(buf.size() == 5);

  ReplayParams open;
  open.arm_on_first_positive = false;
  ReplayBuffer plain(open);
  CHECK(plain.add_segment({{5, 1, -1.0, 6, true}}) == 1);
}

TEST_CASE("buffer stays empty until the first positive reward") {
  ReplayBuffer buf;
  Rng rng(2);
  for (int i = 0; i < 100; ++i)
    CHECK_FALSE(buf.add({0, 0, i % 3 == 0 ? -1.0 : 0.0, 1, false}));
  CHECK(buf.size() == 0);
  CHECK_FALSE(buf.armed());
  CHECK_THROWS_AS(buf.sample(4, rng), BufferEmpty);
  CHECK(buf.add({0, 0, 1.0, 1, true}));
  CHECK(buf.armed());
  CHECK(buf.size() == 1);
  CHECK(buf.add({0, 0, -1.0, 1, true}));
  CHECK(buf.size() == 2);
}

TEST_CASE("buffer respects capacity") {
  ReplayParams p;
  p.capacity = 5;
  p.arm_on_first_positive = false;
  ReplayBuffer buf(p);
  for (int i = 0; i < 12; ++i) buf.add({static_cast<std::uint64_t>(i), 0, 0.0, 0, false});
  CHECK(buf.size() == 5);
  std::set<std::uint64_t> kept;
  for (std::size_t i = 0; i < 5; ++i) kept.insert(buf.at(i).s);
  CHECK(kept == std::set<std::uint64_t>{7, 8, 9, 10, 11});
}

TEST_CASE("alpha zero sampling is uniform") {
  const std::vector<double> p = {0.1, 5.0, 1.0, 2.0, 0.5, 3.0, 0.01, 8.0, 1.5, 0.2};
  const auto counts = draw_counts(p, 0.0, 17);
  CHECK(chi2_pvalue(counts, std::vector<double>(p.size(), 10000.0)) > 0.01);
}

TEST_CASE("prioritized sampling follows p^alpha") {
  const std::vector<double> p = {0.1, 5.0, 1.0, 2.0, 0.5, 3.0, 0.01, 8.0, 1.5, 0.2};
  const auto counts = draw_counts(p, 0.6, 23);
  double z = 0.0;
  for (double v : p) z += std::pow(v, 0.6);
  std::vector<double> expected;
  for (double v : p) expected.push_back(1e5 * std::pow(v, 0.6) / z);
  CHECK(chi2_pvalue(counts, expected) > 0.01);
}

TEST_CASE("importance weights are normalized and beta anneals") {
  ReplayParams p;
  p.capacity = 8;
  p.beta_steps = 10;
  p.arm_on_first_positive = false;
  ReplayBuffer buf(p);
  for (int i = 0; i < 8; ++i) buf.add({static_cast<std::uint64_t>(i), 0, 0.0, 0, false});
  Rng rng(4);
  Sample s = buf.sample(8, rng);
  buf.update_priorities(s, {0.1, 2, 0.3, 4, 0.5, 6, 0.7, 8});
  CHECK(buf.beta() == doctest::Approx(0.4 + 0.06));
  for (int i = 0; i < 20; ++i) s = buf.sample(8, rng);
  CHECK(buf.beta() == 1.0);
  for (double w : s.weight) {
    CHECK(w > 0.0);
    CHECK(w <= 1.0);
  }
}

TEST_CASE("epsilon schedule is linear then flat") {
  EpsilonSchedule e;
  CHECK(e.at(0) == 1.0);
  CHECK(e.at(10000) == doctest::Approx(0.525));
  CHECK(e.at(20000) == 0.05);
  CHECK(e.at(1000000) == 0.05);
}

TEST_CASE("replay learner fits a chain from prioritized minibatches") {
  ReplayQLearner learner({2, 0.5, 0.9, 100}, {});
  learner.buffer().add({1, 0, 1.0, 0, true});
  learner.buffer().add({0, 0, 0.0, 1, false});
  learner.buffer().add({0, 1, 0.0, 0, true});
  Rng rng(8);
  for (int i = 0; i < 3000; ++i) learner.learn(rng);
  CHECK(learner.q().value(1, 0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(learner.q().value(0, 0) == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("freeze latch needs a full window strictly above the threshold") {
  FreezeLatch exact(100, 0.90);
  for (int i = 0; i < 100; ++i) exact.record(i >= 10);  // 90 of 100
  CHECK_FALSE(exact.frozen());
  CHECK(exact.rate() == doctest::Approx(0.90));
  CHECK(exact.record(true));  // the window slides to 91 of 100
  CHECK(exact.rate() == doctest::Approx(0.91));

  FreezeLatch early(100, 0.90);
  for (int i = 0; i < 99; ++i) early.record(true);
  CHECK_FALSE(early.frozen());
  CHECK(early.record(true));
  for (int i = 0; i < 100; ++i) early.record(false);
  CHECK(early.frozen());
}

TEST_CASE("freeze latch agrees with a brute-force window") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int window = 1 + static_cast<int>(rng.index(30));
    const double threshold = 0.5 + 0.5 * rng.uniform();
    FreezeLatch latch(window, threshold);
    std::vector<bool> seen;
    bool expect = false;
    for (int i = 0; i < 200; ++i) {
      const bool ok = rng.bernoulli(0.85);
      seen.push_back(ok);
      if (static_cast<int>(seen.size()) >= window) {
        int hits = 0;
        for (int k = static_cast<int>(seen.size()) - window; k < static_cast<int>(seen.size()); ++k) hits += seen[k];
        if (static_cast<double>(hits) / window > threshold) expect = true;
      }
      CHECK(latch.record(ok) == expect);
    }
  }
}
