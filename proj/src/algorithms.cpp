#include "hierg/algorithms.hpp"

#include <sstream>

#include "algo_common.hpp"

namespace hierg::algo {

using expert::HierTrajectory;
using expert::Segment;
using expert::Trajectory;
using expert::Verdict;
using features::MazeView;
using maze::MazeState;
using maze::Subgoal;
using maze::Terminal;

namespace {

constexpr std::array<std::pair<Algorithm, const char*>, 7> kAlgorithmNames = {{
    {Algorithm::HBC, "hbc"},
    {Algorithm::HgDagger, "hg-dagger"},
    {Algorithm::HgDaggerQ, "hg-dagger-q"},
    {Algorithm::FlatBC, "flat-bc"},
    {Algorithm::FlatDagger, "flat-dagger"},
    {Algorithm::FlatQ, "flat-q"},
    {Algorithm::HDQN, "hdqn"},
}};

}  // namespace

const char* to_string(Algorithm a) {
  for (const auto& [id, name] : kAlgorithmNames)
    if (id == a) return name;
  return "?";
}

const char* to_string(EnvKind e) { return e == EnvKind::Maze ? "maze" : "chain"; }

std::optional<Algorithm> parse_algorithm(std::string_view s) {
  for (const auto& [id, name] : kAlgorithmNames)
    if (s == name) return id;
  return std::nullopt;
}

std::optional<EnvKind> parse_env(std::string_view s) {
  if (s == "maze") return EnvKind::Maze;
  if (s == "chain") return EnvKind::Chain;
  return std::nullopt;
}

std::vector<std::string> subgoal_names(EnvKind env) {
  if (env == EnvKind::Chain) return {"landmark1", "key", "landmark3", "door"};
  std::vector<std::string> out;
  for (Subgoal g : maze::kAllSubgoals) out.push_back(maze::to_string(g));
  return out;
}

// --- metrics ---------------------------------------------------------------

MetricsLog::MetricsLog(const RunConfig& cfg, std::vector<std::string> subgoals)
    : subgoals_(std::move(subgoals)) {
  std::ostringstream out;
  out << "# hierg " << kCodeVersion << " config=" << cfg.config_hash << " seed=" << cfg.seed
      << " algorithm=" << to_string(cfg.algorithm) << " env=" << to_string(cfg.env) << "\n";
  preamble_ = out.str();
}

void MetricsLog::add(EpisodeMetrics m) { rows_.push_back(std::move(m)); }

std::string MetricsLog::csv_header(const std::vector<std::string>& subgoals) {
  std::string h =
      "episode,success,trailing_success,train_success,external_reward,trailing_reward,"
      "lo_steps_cum,hi_labels,hi_labels_cum,lo_labels_cum,full_labels_cum,inspect_cost_cum,"
      "total_cost_cum";
  for (const auto& g : subgoals) h += ",sg_" + g + "_success";
  for (const auto& g : subgoals) h += ",sg_" + g + "_frozen";
  return h + "\n";
}

std::string MetricsLog::to_csv() const {
  std::string out = preamble_ + csv_header(subgoals_);
  for (const auto& m : rows_) {
    out += std::to_string(m.episode) + "," + (m.success ? "1" : "0") + "," +
           fmt_num(m.trailing_success) + "," + (m.train_success ? "1" : "0") + "," +
           fmt_num(m.external_reward) + "," + fmt_num(m.trailing_reward) + "," +
           std::to_string(m.lo_steps) + "," + std::to_string(m.hi_labels) + "," +
           fmt_num(m.hi_label_cost) + "," + fmt_num(m.lo_label_cost) + "," +
           fmt_num(m.full_label_cost) + "," + fmt_num(m.inspect_cost) + "," + fmt_num(m.total_cost);
    for (std::size_t g = 0; g < subgoals_.size(); ++g)
      out += "," + fmt_num(g < m.subgoal_success.size() ? m.subgoal_success[g] : 0.0);
    for (std::size_t g = 0; g < subgoals_.size(); ++g)
      out += std::string(",") + (g < m.frozen.size() && m.frozen[g] ? "1" : "0");
    out += "\n";
  }
  return out;
}

std::vector<double> trailing_mean(const std::vector<double>& xs, int window) {
  std::vector<double> out;
  out.reserve(xs.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    sum += xs[t];
    if (t >= static_cast<std::size_t>(window)) sum -= xs[t - window];
    const std::size_t n = std::min<std::size_t>(t + 1, window);
    out.push_back(sum / static_cast<double>(n));
  }
  return out;
}

std::vector<double> trailing_success(const MetricsLog& log, int window) {
  std::vector<double> xs;
  for (const auto& m : log.rows()) xs.push_back(m.success ? 1.0 : 0.0);
  return trailing_mean(xs, window);
}

namespace detail {

const EpisodeMetrics& Recorder::record(int episode, bool success, bool train_success, double reward,
                                       std::size_t hi_labels, std::vector<double> subgoal_success,
                                       std::vector<bool> frozen) {
  success_.push_back(success ? 1.0 : 0.0);
  reward_.push_back(reward);
  if (static_cast<int>(success_.size()) > cfg_.window) {
    success_.pop_front();
    reward_.pop_front();
  }
  EpisodeMetrics m;
  m.episode = episode;
  m.success = success;
  m.train_success = train_success;
  m.external_reward = reward;
  double s = 0.0, r = 0.0;
  for (double x : success_) s += x;
  for (double x : reward_) r += x;
  m.trailing_success = s / static_cast<double>(success_.size());
  m.trailing_reward = r / static_cast<double>(reward_.size());
  m.lo_steps = lo_steps_;
  m.hi_label_cost = ledger_.cost(OpKind::Label, Level::Hi);
  m.lo_label_cost = ledger_.cost(OpKind::Label, Level::Lo);
  m.full_label_cost = ledger_.cost(OpKind::Label, Level::Full);
  m.inspect_cost = ledger_.inspect_cost();
  m.total_cost = ledger_.total();
  m.hi_labels = hi_labels;
  m.subgoal_success = std::move(subgoal_success);
  m.frozen = std::move(frozen);
  log_.add(std::move(m));
  if (obs_ && obs_->on_episode) obs_->on_episode(log_.back());
  return log_.back();
}

nlohmann::json checkpoint_header(const RunConfig& cfg, int episodes_run) {
  return {{"version", kCodeVersion},
          {"config_hash", cfg.config_hash},
          {"seed", cfg.seed},
          {"algorithm", to_string(cfg.algorithm)},
          {"env", to_string(cfg.env)},
          {"episodes_run", episodes_run}};
}

}  // namespace detail

// --- maze pools --------------------------------------------------------------

MazePool::MazePool(std::uint64_t pool_seed, int size, std::uint64_t stream, int min_dist)
    : pool_seed_(pool_seed), size_(size), stream_(stream), min_dist_(min_dist), cache_(size) {
  if (size <= 0) throw ConfigError("maze pool must be nonempty");
}

const MazeView& MazePool::at(int i) {
  auto& slot = cache_.at(i);
  if (!slot) {
    const auto seed = mix_seed(pool_seed_, 2 * static_cast<std::uint64_t>(i) + stream_);
    slot = std::make_unique<MazeView>(maze::generate_maze(seed, min_dist_));
  }
  return *slot;
}

// --- policies ----------------------------------------------------------------

MazeHierPolicy::MazeHierPolicy(learn::ClassifierParams params)
    : meta_(features::kHiFeatures, maze::kNumSubgoals, params) {
  for (auto& c : lo_) c = learn::Classifier(features::kLoFeatures, features::kLoClasses, params);
}

Subgoal MazeHierPolicy::choose(const MazeView& view, const MazeState& s) const {
  return static_cast<Subgoal>(meta_.predict(features::hi_features(view, s)));
}

std::pair<maze::Action, bool> MazeHierPolicy::act(const MazeView& view, const MazeState& entry,
                                                  const MazeState& s, Subgoal g) const {
  const int cls = lo_[static_cast<int>(g)].predict(features::lo_features(view, entry, s, g));
  return {features::lo_action(cls), features::lo_omega(cls)};
}

HierTrajectory MazeHierPolicy::execute(const MazeView& view, const maze::Horizons& h) const {
  HierTrajectory sigma;
  sigma.initial = maze::initial_state(view.spec());
  MazeState s = sigma.initial;
  for (int hi = 0; hi < h.hi && s.terminal == Terminal::None; ++hi) {
    Segment seg{s, choose(view, s), {}, s};
    for (int k = 0; k < h.lo && s.terminal == Terminal::None; ++k) {
      const auto [a, omega] = act(view, seg.entry, s, seg.subgoal);
      const MazeState next = maze::step(view.spec(), s, a).state;
      seg.steps.push_back({s, a, omega});
      s = next;
      if (omega || s.room != seg.entry.room) break;
    }
    seg.exit = s;
    sigma.segments.push_back(std::move(seg));
  }
  return sigma;
}

void MazeHierPolicy::fit(const learn::LabeledDataset& hi,
                         const std::array<learn::LabeledDataset, maze::kNumSubgoals>& lo) {
  if (hi.size() > meta_fit_) {
    meta_.train(hi);
    meta_fit_ = hi.size();
  }
  for (int g = 0; g < maze::kNumSubgoals; ++g) {
    if (lo[g].size() > lo_fit_[g]) {
      lo_[g].train(lo[g]);
      lo_fit_[g] = lo[g].size();
    }
  }
}

nlohmann::json MazeHierPolicy::to_json() const {
  nlohmann::json subs = nlohmann::json::array();
  for (const auto& c : lo_) subs.push_back(c.to_json());
  return {{"meta", meta_.to_json()}, {"subpolicies", subs}};
}

MazeFlatPolicy::MazeFlatPolicy(learn::ClassifierParams params)
    : clf_(features::kFlatFeatures, maze::kNumActions, params) {}

maze::Action MazeFlatPolicy::act(const MazeView& view, const MazeState& s) const {
  return static_cast<maze::Action>(clf_.predict(features::flat_features(view, s)));
}

Trajectory MazeFlatPolicy::execute(const MazeView& view) const {
  Trajectory t;
  t.states.push_back(maze::initial_state(view.spec()));
  while (t.final_state().terminal == Terminal::None) {
    const maze::Action a = act(view, t.final_state());
    t.actions.push_back(a);
    t.states.push_back(maze::step(view.spec(), t.final_state(), a).state);
  }
  return t;
}

void MazeFlatPolicy::fit(const learn::LabeledDataset& data) {
  if (data.size() > fit_) {
    clf_.train(data);
    fit_ = data.size();
  }
}

nlohmann::json MazeFlatPolicy::to_json() const { return {{"policy", clf_.to_json()}}; }

// --- hg-DAgger feedback -------------------------------------------------------

HgFeedback hg_dagger_feedback(expert::Expert& ex, const maze::MazeSpec& spec,
                              const HierTrajectory& sigma, CostLedger& ledger) {
  HgFeedback fb;
  if (ex.inspect_full(spec, sigma.full(), ledger) == Verdict::Pass) {
    fb.passed = true;
    return fb;
  }
  const auto states = sigma.hi_states();
  fb.hi_labels = ex.label_hi(spec, states, ledger);
  for (std::size_t h = 0; h < sigma.segments.size(); ++h) {
    const Segment& seg = sigma.segments[h];
    if (seg.subgoal != fb.hi_labels[h]) break;
    ++fb.lo_inspections;
    if (ex.inspect_lo(spec, seg, ledger) == Verdict::Fail) {
      fb.labeled_segment = static_cast<int>(h);
      fb.lo_labels = ex.label_lo(spec, seg, ledger);
      break;
    }
  }
  return fb;
}

// --- imitation drivers ---------------------------------------------------------

namespace detail {

namespace {

bool hierarchical(Algorithm a) { return a == Algorithm::HBC || a == Algorithm::HgDagger; }

void add_demo(const MazeView& view, const HierTrajectory& demo, learn::LabeledDataset& d_hi,
              std::array<learn::LabeledDataset, maze::kNumSubgoals>& d_lo) {
  for (const Segment& seg : demo.segments) {
    d_hi.append(features::hi_features(view, seg.entry), static_cast<int>(seg.subgoal));
    for (const auto& st : seg.steps)
      d_lo[static_cast<int>(seg.subgoal)].append(
          features::lo_features(view, seg.entry, st.state, seg.subgoal),
          features::lo_class(st.action, st.omega));
  }
}

}  // namespace

RunResult run_maze_imitation(const RunConfig& cfg, expert::Expert& ex, const Observer* obs) {
  RunResult result;
  result.ledger = CostLedger(cfg.costs);
  CostLedger& ledger = result.ledger;
  Recorder rec(cfg, ledger, obs);
  MazePool train(cfg.pool_seed, cfg.train_mazes, 0, cfg.min_dist);
  MazePool test(cfg.pool_seed, cfg.test_mazes, 1, cfg.min_dist);
  Rng rng(mix_seed(cfg.seed, 1));

  const bool hier = hierarchical(cfg.algorithm);
  const bool pure_bc = cfg.algorithm == Algorithm::HBC || cfg.algorithm == Algorithm::FlatBC;
  learn::LabeledDataset d_hi, d_flat;
  std::array<learn::LabeledDataset, maze::kNumSubgoals> d_lo;
  MazeHierPolicy hpol(cfg.classifier);
  MazeFlatPolicy fpol(cfg.classifier);
  SubgoalWindows windows(maze::kNumSubgoals, cfg.window);

  int t = 0;
  for (; t < cfg.episodes; ++t) {
    if (rec.cancelled()) {
      result.stopped_early = true;
      break;
    }
    const int episode = t + 1;
    ledger.begin_episode(episode);
    const MazeView& view = train.at(rng.index(train.size()));
    const auto& spec = view.spec();
    const bool demo = pure_bc || t < cfg.warm_start;
    bool train_success = false;

    if (hier && demo) {
      const HierTrajectory d = ex.hier_demo(spec, ledger);
      add_demo(view, d, d_hi, d_lo);
      train_success = d.final_state().terminal == Terminal::ReachedGoal;
    } else if (hier) {
      const HierTrajectory sigma = hpol.execute(view, cfg.horizons);
      if (obs && obs->on_maze_rollout) obs->on_maze_rollout(episode, sigma);
      rec.add_lo_steps(static_cast<long>(sigma.lo_length()));
      for (const Segment& seg : sigma.segments)
        windows.add(static_cast<int>(seg.subgoal),
                    maze::subgoal_completed(spec, seg.entry, seg.exit, seg.subgoal));
      const HgFeedback fb = hg_dagger_feedback(ex, spec, sigma, ledger);
      for (std::size_t h = 0; h < fb.hi_labels.size(); ++h)
        d_hi.append(features::hi_features(view, sigma.segments[h].entry),
                    static_cast<int>(fb.hi_labels[h]));
      if (fb.labeled_segment >= 0) {
        const Segment& seg = sigma.segments[fb.labeled_segment];
        auto& d = d_lo[static_cast<int>(seg.subgoal)];
        for (std::size_t i = 0; i < seg.steps.size(); ++i)
          d.append(features::lo_features(view, seg.entry, seg.steps[i].state, seg.subgoal),
                   features::lo_class(fb.lo_labels[i].action, fb.lo_labels[i].omega));
      }
      train_success = sigma.final_state().terminal == Terminal::ReachedGoal;
    } else if (demo) {
      const Trajectory d = ex.flat_demo(spec, ledger);
      for (std::size_t i = 0; i < d.length(); ++i)
        d_flat.append(features::flat_features(view, d.states[i]), static_cast<int>(d.actions[i]));
      train_success = d.final_state().terminal == Terminal::ReachedGoal;
    } else {
      const Trajectory traj = fpol.execute(view);
      rec.add_lo_steps(static_cast<long>(traj.length()));
      if (ex.inspect_full(spec, traj, ledger) == Verdict::Fail) {
        const auto labels = ex.label_full(spec, traj, ledger);
        for (std::size_t i = 0; i < labels.size(); ++i)
          d_flat.append(features::flat_features(view, traj.states[i]), static_cast<int>(labels[i]));
      }
      train_success = traj.final_state().terminal == Terminal::ReachedGoal;
    }

    bool success = false;
    const MazeView& tview = test.at(t % test.size());
    if (hier) {
      hpol.fit(d_hi, d_lo);
      success = hpol.execute(tview, cfg.horizons).final_state().terminal == Terminal::ReachedGoal;
    } else {
      if (!d_flat.empty()) fpol.fit(d_flat);
      success = fpol.execute(tview).final_state().terminal == Terminal::ReachedGoal;
    }
    rec.record(episode, success, train_success, success ? maze::kGoalReward : 0.0, d_hi.size(),
               hier ? windows.rates() : std::vector<double>(maze::kNumSubgoals, 0.0),
               std::vector<bool>(maze::kNumSubgoals, false));
  }

  result.checkpoint = checkpoint_header(cfg, t);
  result.checkpoint["policy"] = hier ? hpol.to_json() : fpol.to_json();
  result.hi_dataset = hier ? d_hi.size() : d_flat.size();
  if (hier)
    for (const auto& d : d_lo) result.lo_datasets.push_back(d.size());
  result.log = rec.take();
  return result;
}

}  // namespace detail

RunResult run(const RunConfig& cfg, expert::Expert* ex, const Observer* obs) {
  if (cfg.episodes < 0) throw ConfigError("episodes must be nonnegative");
  if (cfg.warm_start < 0 || cfg.warm_start > cfg.episodes)
    throw ConfigError("warm_start must lie in [0, episodes]");
  if (cfg.window <= 0) throw ConfigError("window must be positive");
  if (cfg.env == EnvKind::Chain) {
    if (cfg.algorithm != Algorithm::HgDaggerQ && cfg.algorithm != Algorithm::HDQN &&
        cfg.algorithm != Algorithm::FlatQ)
      throw ConfigError(std::string("algorithm ") + to_string(cfg.algorithm) +
                        " is not available on the chain environment");
    return detail::run_chain(cfg, obs);
  }
  expert::SyntheticExpert fallback;
  expert::Expert& e = ex ? *ex : fallback;
  switch (cfg.algorithm) {
    case Algorithm::HgDaggerQ:
    case Algorithm::HDQN:
    case Algorithm::FlatQ:
      return detail::run_maze_rl(cfg, e, obs);
    default:
      return detail::run_maze_imitation(cfg, e, obs);
  }
}

}  // namespace hierg::algo
