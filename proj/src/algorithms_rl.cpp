// Drivers with Q-learning subpolicies: hg-DAgger/Q, h-DQN and flat Q, on the
// maze and on the chain.

#include <cmath>

#include "algo_common.hpp"

namespace hierg::algo::detail {

using learn::Transition;

namespace {

// One replay Q-learner per subgoal, with the shared enhancements: buffers
// arm on their first positive reward, and a subgoal whose trailing success
// exceeds the freeze threshold stops learning and acts greedily.
class SubLearners {
 public:
  SubLearners(int n, int num_actions, const RlParams& p)
      : p_(p),
        num_actions_(num_actions),
        windows_(n, p.freeze_window),
        latches_(n, learn::FreezeLatch(p.freeze_window, p.freeze_threshold)),
        fed_(n, 0),
        since_(n, 0),
        frozen_(n, false) {
    const learn::QParams q{num_actions, p.alpha, p.gamma, p.target_period};
    for (int g = 0; g < n; ++g) q_.emplace_back(q, p.replay, p.batch);
  }

  int act(int g, std::uint64_t key, Rng& rng, bool greedy) const {
    const double eps = greedy || frozen_[g] ? 0.0 : p_.epsilon.at(fed_[g]);
    if (eps > 0.0 && rng.bernoulli(eps)) return rng.index(num_actions_);
    return q_[g].q().greedy(key, rng);
  }

  void feed(int g, const std::vector<Transition>& ts, bool completed, Rng& rng) {
    windows_.add(g, completed);
    if (frozen_[g]) return;
    const bool freeze = latches_[g].record(completed);
    // A stored segment is also swept once backwards, which carries a reward at
    // its end through the whole segment.
    if (q_[g].buffer().add_segment(ts) > 0)
      for (auto it = ts.rbegin(); it != ts.rend(); ++it) q_[g].q().backup(*it);
    for (std::size_t i = 0; i < ts.size(); ++i) {
      ++fed_[g];
      if (++since_[g] >= p_.train_every) {
        since_[g] = 0;
        if (q_[g].buffer().size() > 0) q_[g].learn(rng);
      }
    }
    if (freeze) frozen_[g] = true;
  }

  int size() const { return static_cast<int>(q_.size()); }
  const learn::ReplayQLearner& learner(int g) const { return q_[g]; }
  std::vector<double> rates() const { return windows_.rates(); }
  const std::vector<bool>& frozen() const { return frozen_; }

  std::vector<std::uint64_t> fingerprints() const {
    std::vector<std::uint64_t> out;
    for (const auto& l : q_) out.push_back(l.q().fingerprint());
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (int g = 0; g < size(); ++g)
      out.push_back({{"q", q_[g].q().to_json()}, {"frozen", static_cast<bool>(frozen_[g])},
                     {"fed", fed_[g]}});
    return out;
  }

 private:
  RlParams p_;
  int num_actions_;
  std::vector<learn::ReplayQLearner> q_;
  SubgoalWindows windows_;
  std::vector<learn::FreezeLatch> latches_;
  std::vector<long> fed_;
  std::vector<int> since_;
  std::vector<bool> frozen_;
};

// Tabular meta-controller over subgoals for h-DQN, updated once per segment
// with the external reward the segment collected.
class MetaQ {
 public:
  MetaQ(int num_subgoals, const MetaRlParams& p)
      : p_(p), q_(learn::QParams{num_subgoals, p.alpha, p.gamma, 0}) {}

  int choose(std::uint64_t key, Rng& rng, bool greedy) {
    if (!greedy) {
      const double eps = p_.epsilon.at(decisions_++);
      if (rng.bernoulli(eps)) return rng.index(q_.params().num_actions);
    }
    return q_.greedy(key, rng);
  }
  void update(const Transition& t) { q_.update(t); }
  nlohmann::json to_json() const { return q_.to_json(); }

 private:
  MetaRlParams p_;
  learn::QTable q_;
  long decisions_ = 0;
};

template <class State>
struct RlSegment {
  State entry;
  int g = 0;
  std::vector<Transition> ts;
  bool completed = false;
};

void report_q(const Observer* obs, int episode, const SubLearners& subs) {
  if (obs && obs->on_q_tables) obs->on_q_tables(episode, subs.fingerprints());
}

// --- maze ----------------------------------------------------------------------

using features::MazeView;
using maze::MazeState;
using maze::Subgoal;
using maze::Terminal;

struct MazeEpisode {
  expert::HierTrajectory sigma;
  std::vector<RlSegment<MazeState>> segs;
  bool success = false;
  long steps = 0;
};

std::uint64_t maze_flat_key(const MazeView& view, const MazeState& s) {
  return features::hi_key(view, s) * maze::kLocalPositions + maze::local_position(s.room, s.agent);
}

}  // namespace

RunResult run_maze_rl(const RunConfig& cfg, expert::Expert& ex, const Observer* obs) {
  RunResult result;
  result.ledger = CostLedger(cfg.costs);
  CostLedger& ledger = result.ledger;
  Recorder rec(cfg, ledger, obs);
  MazePool train(cfg.pool_seed, cfg.train_mazes, 0, cfg.min_dist);
  MazePool test(cfg.pool_seed, cfg.test_mazes, 1, cfg.min_dist);
  Rng rng(mix_seed(cfg.seed, 1));

  const Algorithm alg = cfg.algorithm;
  const int cap = cfg.rl.lo_cap > 0 ? cfg.rl.lo_cap : cfg.horizons.lo;
  SubLearners subs(alg == Algorithm::FlatQ ? 1 : maze::kNumSubgoals, maze::kNumActions, cfg.rl);
  learn::Classifier meta(features::kHiFeatures, maze::kNumSubgoals, cfg.classifier);
  learn::LabeledDataset d_hi;
  MetaQ meta_q(maze::kNumSubgoals, cfg.meta);
  // Head-start prefixes replay the optimal path; they are part of the task
  // definition for h-DQN, not expert queries, so nothing is charged.
  expert::Oracle head_oracle;

  auto head_start = [&](const MazeView& view) {
    MazeState s = maze::initial_state(view.spec());
    if (cfg.head_start <= 0.0) return s;
    const auto demo = head_oracle.flat_demo(view.spec());
    const auto n = static_cast<std::size_t>(std::llround(cfg.head_start * demo.length()));
    for (std::size_t i = 0; i < n && i < demo.length(); ++i) s = maze::step(view.spec(), s, demo.actions[i]).state;
    return s;
  };

  auto flat_episode = [&](const MazeView& view, bool greedy) {
    MazeEpisode out;
    const auto& spec = view.spec();
    MazeState s = head_start(view);
    RlSegment<MazeState> seg{s, 0, {}, false};
    while (s.terminal == Terminal::None) {
      const std::uint64_t key = maze_flat_key(view, s);
      const int a = subs.act(0, key, rng, greedy);
      const auto r = maze::step(spec, s, static_cast<maze::Action>(a));
      seg.ts.push_back({key, a, r.reward, maze_flat_key(view, r.state), r.state.terminal != Terminal::None});
      s = r.state;
      ++out.steps;
    }
    out.success = s.terminal == Terminal::ReachedGoal;
    seg.completed = out.success;
    out.segs.push_back(std::move(seg));
    return out;
  };

  auto hier_episode = [&](const MazeView& view, bool greedy) {
    MazeEpisode out;
    const auto& spec = view.spec();
    MazeState s = head_start(view);
    out.sigma.initial = s;
    for (int h = 0; h < cfg.horizons.hi && s.terminal == Terminal::None; ++h) {
      const std::uint64_t hk = features::hi_key(view, s);
      const int gi = alg == Algorithm::HDQN ? meta_q.choose(hk, rng, greedy)
                                            : meta.predict(features::hi_features(view, s));
      const Subgoal g = static_cast<Subgoal>(gi);
      expert::Segment seg{s, g, {}, s};
      RlSegment<MazeState> rs{s, gi, {}, false};
      double external = 0.0;
      for (int k = 0; k < cap && s.terminal == Terminal::None; ++k) {
        const std::uint64_t key = features::lo_key(view, seg.entry, s, g);
        const int a = subs.act(gi, key, rng, greedy);
        const auto r = maze::step(spec, s, static_cast<maze::Action>(a));
        const MazeState& next = r.state;
        const double pseudo = maze::pseudo_reward(spec, seg.entry, s, next, g);
        rs.completed = maze::subgoal_completed(spec, seg.entry, next, g);
        const bool done =
            rs.completed || next.terminal != Terminal::None || next.room != seg.entry.room;
        rs.ts.push_back({key, a, pseudo, features::lo_key(view, seg.entry, next, g), done});
        seg.steps.push_back({s, static_cast<maze::Action>(a), rs.completed});
        external += r.reward;
        s = next;
        ++out.steps;
        if (done) break;
      }
      seg.exit = s;
      if (alg == Algorithm::HDQN && !greedy)
        meta_q.update({hk, gi, external, features::hi_key(view, s), s.terminal != Terminal::None});
      out.sigma.segments.push_back(std::move(seg));
      out.segs.push_back(std::move(rs));
    }
    out.success = s.terminal == Terminal::ReachedGoal;
    return out;
  };

  auto play = [&](const MazeView& view, bool greedy) {
    return alg == Algorithm::FlatQ ? flat_episode(view, greedy) : hier_episode(view, greedy);
  };

  int t = 0;
  for (; t < cfg.episodes; ++t) {
    if (rec.cancelled()) {
      result.stopped_early = true;
      break;
    }
    const int episode = t + 1;
    ledger.begin_episode(episode);
    const MazeView& view = train.at(rng.index(train.size()));
    MazeEpisode ep = play(view, false);
    rec.add_lo_steps(ep.steps);

    if (alg == Algorithm::HgDaggerQ) {
      if (ex.inspect_full(view.spec(), ep.sigma.full(), ledger) == expert::Verdict::Fail) {
        const auto states = ep.sigma.hi_states();
        const auto labels = ex.label_hi(view.spec(), states, ledger);
        for (std::size_t h = 0; h < labels.size(); ++h)
          d_hi.append(features::hi_features(view, states[h]), static_cast<int>(labels[h]));
        meta.train(d_hi);
        // Experience only reaches a subgoal's buffer from states where the
        // expert would have chosen that subgoal.
        for (std::size_t h = 0; h < labels.size(); ++h) {
          auto& seg = ep.segs[h];
          if (seg.g != static_cast<int>(labels[h])) continue;
          subs.feed(seg.g, seg.ts, seg.completed, rng);
          if (obs && obs->on_maze_feed) obs->on_maze_feed(view.spec(), seg.entry, labels[h]);
        }
      } else {
        // No labels on a pass; achieved subgoals are the only evidence, and the
        // final subgoal can only ever succeed in a passing episode.
        for (auto& seg : ep.segs) {
          if (!seg.completed) continue;
          subs.feed(seg.g, seg.ts, seg.completed, rng);
          if (obs && obs->on_maze_feed) obs->on_maze_feed(view.spec(), seg.entry, static_cast<Subgoal>(seg.g));
        }
      }
    } else {
      for (auto& seg : ep.segs) {
        subs.feed(seg.g, seg.ts, seg.completed, rng);
        if (obs && obs->on_maze_feed && alg != Algorithm::FlatQ)
          obs->on_maze_feed(view.spec(), seg.entry, static_cast<Subgoal>(seg.g));
      }
    }
    report_q(obs, episode, subs);

    const bool success = play(test.at(t % test.size()), true).success;
    rec.record(episode, success, ep.success, success ? maze::kGoalReward : 0.0, d_hi.size(),
               subs.rates(), subs.frozen());
    if (rec.budget_spent()) {
      result.stopped_early = t + 1 < cfg.episodes;
      ++t;
      break;
    }
  }

  result.checkpoint = checkpoint_header(cfg, t);
  if (alg == Algorithm::HgDaggerQ) result.checkpoint["meta"] = meta.to_json();
  if (alg == Algorithm::HDQN) result.checkpoint["meta"] = meta_q.to_json();
  result.checkpoint["subpolicies"] = subs.to_json();
  result.hi_dataset = d_hi.size();
  for (int g = 0; g < subs.size(); ++g) result.lo_datasets.push_back(subs.learner(g).buffer().size());
  result.log = rec.take();
  return result;
}

// --- chain ---------------------------------------------------------------------

namespace {

using chain::ChainState;

struct ChainEpisode {
  std::vector<RlSegment<ChainState>> segs;
  double external = 0.0;
  bool success = false;
  long steps = 0;
};

std::uint64_t chain_flat_key(const chain::ChainSpec& spec, const ChainState& s) {
  return chain::state_key(spec, s) +
         static_cast<std::uint64_t>(s.done_count()) * 2 * static_cast<std::uint64_t>(spec.num_cells());
}

// Factored indicators (landmarks done, key, region) so the meta classifier
// generalizes across regions it has not been labeled in.
constexpr int kChainMetaFeatures = (chain::kNumLandmarks + 1) + 2 + chain::kRegionRows * chain::kRegionCols;

learn::Features meta_features(const chain::ChainSpec& spec, const ChainState& s) {
  const int key = chain::meta_key(spec, s);
  const int regions = chain::kRegionRows * chain::kRegionCols;
  const auto done = static_cast<std::uint32_t>(key / (2 * regions));
  const auto has_key = static_cast<std::uint32_t>(key / regions % 2);
  const auto region = static_cast<std::uint32_t>(key % regions);
  return {done, chain::kNumLandmarks + 1 + has_key, chain::kNumLandmarks + 3 + region};
}

}  // namespace

RunResult run_chain(const RunConfig& cfg, const Observer* obs) {
  RunResult result;
  result.ledger = CostLedger(cfg.costs);
  CostLedger& ledger = result.ledger;
  Recorder rec(cfg, ledger, obs);
  Rng rng(mix_seed(cfg.seed, 1));
  const chain::ChainSpec& spec = chain::default_chain();
  double max_reward = 0.0;
  for (int k = 0; k < chain::kNumLandmarks; ++k) max_reward += spec.external_reward(k);

  const Algorithm alg = cfg.algorithm;
  const int cap = cfg.rl.lo_cap > 0 ? cfg.rl.lo_cap : kChainLoCap;
  SubLearners subs(alg == Algorithm::FlatQ ? 1 : chain::kNumLandmarks, chain::kNumActions, cfg.rl);
  learn::Classifier meta(kChainMetaFeatures, chain::kNumLandmarks, cfg.classifier);
  learn::LabeledDataset d_hi;
  MetaQ meta_q(chain::kNumLandmarks, cfg.meta);

  auto flat_episode = [&](bool greedy) {
    ChainEpisode out;
    ChainState s = chain::initial_state(spec);
    RlSegment<ChainState> seg{s, 0, {}, false};
    while (!chain::finished(s)) {
      const std::uint64_t key = chain_flat_key(spec, s);
      const int a = subs.act(0, key, rng, greedy);
      const auto r = chain::step(spec, s, static_cast<chain::Action>(a));
      const bool done = !r.state.alive || r.state.complete();
      seg.ts.push_back({key, a, r.external, chain_flat_key(spec, r.state), done});
      out.external += r.external;
      s = r.state;
      ++out.steps;
    }
    out.success = s.complete();
    seg.completed = out.success;
    out.segs.push_back(std::move(seg));
    return out;
  };

  auto hier_episode = [&](bool greedy) {
    ChainEpisode out;
    ChainState s = chain::initial_state(spec);
    while (!chain::finished(s)) {
      const int g = alg == Algorithm::HDQN
                        ? meta_q.choose(static_cast<std::uint64_t>(chain::meta_key(spec, s)), rng, greedy)
                        : meta.predict(meta_features(spec, s));
      RlSegment<ChainState> seg{s, g, {}, false};
      double external = 0.0;
      for (int k = 0; k < cap && !chain::finished(s); ++k) {
        const std::uint64_t key = chain::state_key(spec, s);
        const int a = subs.act(g, key, rng, greedy);
        const auto r = chain::step(spec, s, static_cast<chain::Action>(a));
        seg.completed = r.completed == g;
        const double pseudo = seg.completed ? 1.0 : r.state.alive ? 0.0 : -1.0;
        const bool done = seg.completed || !r.state.alive || r.state.complete();
        seg.ts.push_back({key, a, pseudo, chain::state_key(spec, r.state), done});
        external += r.external;
        s = r.state;
        ++out.steps;
        if (done) break;
      }
      if (alg == Algorithm::HDQN && !greedy)
        meta_q.update({static_cast<std::uint64_t>(chain::meta_key(spec, seg.entry)), g, external,
                       static_cast<std::uint64_t>(chain::meta_key(spec, s)), chain::finished(s)});
      out.external += external;
      out.segs.push_back(std::move(seg));
    }
    out.success = s.complete();
    return out;
  };

  auto play = [&](bool greedy) { return alg == Algorithm::FlatQ ? flat_episode(greedy) : hier_episode(greedy); };

  int t = 0;
  for (; t < cfg.episodes; ++t) {
    if (rec.cancelled()) {
      result.stopped_early = true;
      break;
    }
    const int episode = t + 1;
    ledger.begin_episode(episode);
    ChainEpisode ep = play(false);
    rec.add_lo_steps(ep.steps);
    if (alg == Algorithm::HgDaggerQ) {
      // The chain expert passes an episode iff every landmark was reached and
      // labels each HI state with the next landmark in order.
      ledger.charge(OpKind::Inspect, Level::Full, static_cast<std::size_t>(ep.steps));
      if (!ep.success) {
        ledger.charge(OpKind::Label, Level::Hi, ep.segs.size());
        for (const auto& seg : ep.segs) d_hi.append(meta_features(spec, seg.entry), seg.entry.done_count());
        meta.train(d_hi);
        for (auto& seg : ep.segs) {
          if (seg.g != seg.entry.done_count()) continue;
          subs.feed(seg.g, seg.ts, seg.completed, rng);
          if (obs && obs->on_chain_feed) obs->on_chain_feed(seg.entry, seg.g);
        }
      } else {
        // Landmarks complete only in order, so an achieved subgoal was the
        // expert's choice.
        for (auto& seg : ep.segs) {
          if (!seg.completed) continue;
          subs.feed(seg.g, seg.ts, seg.completed, rng);
          if (obs && obs->on_chain_feed) obs->on_chain_feed(seg.entry, seg.g);
        }
      }
    } else {
      for (auto& seg : ep.segs) {
        subs.feed(seg.g, seg.ts, seg.completed, rng);
        if (obs && obs->on_chain_feed && alg != Algorithm::FlatQ) obs->on_chain_feed(seg.entry, seg.g);
      }
    }
    report_q(obs, episode, subs);

    const ChainEpisode eval = play(true);
    rec.record(episode, eval.success, ep.success, eval.external, d_hi.size(), subs.rates(),
               subs.frozen());
    const bool solved = cfg.stop_when_solved && rec.window_full() && rec.trailing_reward() >= max_reward;
    if (rec.budget_spent() || solved) {
      result.stopped_early = t + 1 < cfg.episodes;
      ++t;
      break;
    }
  }

  result.checkpoint = checkpoint_header(cfg, t);
  if (alg == Algorithm::HgDaggerQ) result.checkpoint["meta"] = meta.to_json();
  if (alg == Algorithm::HDQN) result.checkpoint["meta"] = meta_q.to_json();
  result.checkpoint["subpolicies"] = subs.to_json();
  result.hi_dataset = d_hi.size();
  for (int g = 0; g < subs.size(); ++g) result.lo_datasets.push_back(subs.learner(g).buffer().size());
  result.log = rec.take();
  return result;
}

}  // namespace hierg::algo::detail
