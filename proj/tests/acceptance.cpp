// Acceptance run: one PASS/FAIL line per headline criterion. Exits nonzero
// when any criterion fails.

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "hierg/algorithms.hpp"
#include "hierg/experiment.hpp"
#include "hierg/expert.hpp"
#include "hierg/learners.hpp"
#include "hierg/theory.hpp"

using namespace hierg;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
  std::printf("%s %-22s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// Plain BFS over passable cells; -1 when the goal is unreachable.
int bfs_distance(const maze::MazeSpec& spec) {
  std::vector<int> dist(maze::kCells, -1);
  std::deque<maze::Cell> queue{spec.start()};
  dist[spec.start().index()] = 0;
  const int dr[] = {-1, 1, 0, 0}, dc[] = {0, 0, -1, 1};
  while (!queue.empty()) {
    const maze::Cell c = queue.front();
    queue.pop_front();
    if (c == spec.goal()) return dist[c.index()];
    for (int k = 0; k < 4; ++k) {
      const maze::Cell n{c.row + dr[k], c.col + dc[k]};
      if (n.row < 0 || n.col < 0 || n.row >= maze::kSize || n.col >= maze::kSize) continue;
      if (spec.kind(n) == maze::CellKind::Lava || dist[n.index()] >= 0) continue;
      dist[n.index()] = dist[c.index()] + 1;
      queue.push_back(n);
    }
  }
  return -1;
}

exp::ExperimentConfig load(const char* name) {
  return exp::load_config(fs::path(HIERG_SOURCE_DIR) / "configs" / name);
}

algo::RunResult run_seed(const exp::ExperimentConfig& cfg, std::uint64_t seed) {
  algo::RunConfig rc = cfg.run;
  rc.seed = seed;
  rc.config_hash = cfg.hash;
  return algo::run(rc);
}

// Trailing success recomputed from the per-episode success column.
std::vector<double> trailing(const algo::MetricsLog& log, int window) {
  std::vector<double> out;
  int hits = 0;
  const auto& rows = log.rows();
  for (std::size_t t = 0; t < rows.size(); ++t) {
    hits += rows[t].success;
    if (t >= static_cast<std::size_t>(window)) hits -= rows[t - window].success;
    out.push_back(static_cast<double>(hits) / std::min<double>(t + 1, window));
  }
  return out;
}

// First episode (1-based) with a full window at or above `level`; 0 if never.
int first_reaching(const algo::MetricsLog& log, double level, int window) {
  const auto tr = trailing(log, window);
  for (std::size_t t = window - 1; t < tr.size(); ++t)
    if (tr[t] >= level) return static_cast<int>(t) + 1;
  return 0;
}

// ---------------------------------------------------------------------------

std::vector<maze::MazeSpec> mazes;

void maze_generation() {
  const auto t0 = Clock::now();
  int valid = 0, shortest = 1 << 30;
  for (int i = 0; i < 2000; ++i) {
    mazes.push_back(maze::generate_maze(mix_seed(0, i)));
    const int d = bfs_distance(mazes.back());
    if (d >= 40) ++valid;
    if (d >= 0) shortest = std::min(shortest, d);
  }
  const double secs = seconds_since(t0);
  report("maze-generation", valid == 2000 && secs < 60.0,
         fmt("%d/2000 feasible with shortest path >= 40 (min %d), %.1f s (limit 60 s)", valid, shortest, secs));
}

void expert_soundness() {
  expert::SyntheticExpert ex;
  int solved = 0, exact = 0;
  for (int i = 1000; i < 2000; ++i) {
    CostLedger ledger;
    const expert::HierTrajectory d = ex.hier_demo(mazes[i], ledger);
    const bool ok = d.final_state().terminal == maze::Terminal::ReachedGoal &&
                    static_cast<int>(d.lo_length()) <= maze::kFullHorizon;
    solved += ok;
    if (i < 1100 && ok && static_cast<int>(d.lo_length()) == bfs_distance(mazes[i])) ++exact;
  }
  report("expert-soundness", solved == 1000 && exact == 100,
         fmt("%d/1000 test mazes solved within %d steps; %d/100 expert paths equal BFS length", solved,
             maze::kFullHorizon, exact));
}

void theorem_verification() {
  const auto t0 = Clock::now();
  int violations = 0, mistake_breaches = 0, cost_breaches = 0;
  const int n = 50;
  for (int i = 0; i < n; ++i) {
    const theory::SyntheticInstance inst = theory::make_instance(1 + i);
    const theory::VerifyReport r = theory::verify_bounds(inst, 150);
    violations += static_cast<int>(r.violations.size());
    const auto& p = r.params;
    if (r.hier_cost > r.hier_bound || r.flat_cost > r.flat_bound) ++cost_breaches;
    // Counts are integers: compare against the floor of log2.
    if (r.hi_mistakes > std::floor(std::log2(p.size_M) + 1e-9)) ++mistake_breaches;
    for (int m : r.lo_mistakes)
      if (m > std::floor(std::log2(p.size_Pi_lo) + 1e-9)) ++mistake_breaches;
  }
  const double secs = seconds_since(t0);
  report("theorem-verification", violations == 0 && cost_breaches == 0 && mistake_breaches == 0 && secs < 300,
         fmt("%d instances: %d violations, %d cost breaches, %d mistake-bound breaches, %.1f s (limit 300 s)", n,
             violations, cost_breaches, mistake_breaches, secs));
}

void label_efficiency() {
  const auto hg = load("hgdagger_maze.json");
  const auto flat = load("flat_dagger_maze.json");
  std::string detail;
  bool ok = true;
  double worst_secs = 0.0;
  for (std::uint64_t seed : hg.seeds) {
    auto t0 = Clock::now();
    const auto a = run_seed(hg, seed);
    worst_secs = std::max(worst_secs, seconds_since(t0));
    t0 = Clock::now();
    const auto b = run_seed(flat, seed);
    worst_secs = std::max(worst_secs, seconds_since(t0));
    const int ea = first_reaching(a.log, 0.8, 100), eb = first_reaching(b.log, 0.8, 100);
    if (ea == 0 || eb == 0) {
      ok = false;
      detail += fmt(" seed%d:unreached", static_cast<int>(seed));
      continue;
    }
    const int e = std::max(ea, eb);
    const auto& ma = a.log.rows()[e - 1];
    const auto& mb = b.log.rows()[e - 1];
    const double lo_hg = ma.lo_label_cost + ma.full_label_cost;
    const double lo_flat = mb.lo_label_cost + mb.full_label_cost;
    const double ratio = lo_hg / lo_flat;
    ok = ok && ratio <= 0.5;
    detail += fmt(" seed%d@%d:%.0f/%.0f=%.3f", static_cast<int>(seed), e, lo_hg, lo_flat, ratio);
  }
  ok = ok && hg.run.episodes <= 3000 && flat.run.episodes <= 3000 && worst_secs <= 1800;
  report("label-efficiency", ok,
         "LO-label cost hg/flat at first joint trailing-100 >= 0.8 (limit 0.5):" + detail +
             fmt("; slowest run %.0f s", worst_secs));
}

void label_flattening() {
  const auto cfg = load("hgdaggerq_maze.json");
  std::vector<double> ratios;
  std::string detail;
  for (std::uint64_t seed : cfg.seeds) {
    const auto r = run_seed(cfg, seed);
    const auto& rows = r.log.rows();
    const std::size_t n = rows.size(), q = n / 4;
    auto cum = [&](std::size_t t) { return t == 0 ? 0.0 : static_cast<double>(rows[t - 1].hi_labels); };
    const double first = cum(q), last = cum(n) - cum(n - q);
    ratios.push_back(last / first);
    detail += fmt(" %.0f->%.0f", first, last);
  }
  const double m = median(ratios);
  report("hi-label-flattening", m < 0.25,
         fmt("median last/first quartile new HI labels %.3f (limit < 0.25);", m) + detail);
}

void chain_comparison() {
  auto peak = [](const exp::ExperimentConfig& cfg, std::uint64_t seed) {
    const auto r = run_seed(cfg, seed);
    double best = 0.0;
    for (const auto& m : r.log.rows())
      if (m.lo_steps <= 500000) best = std::max(best, m.trailing_reward);
    return best;
  };
  const auto hybrid = load("hgdaggerq_chain.json");
  const auto hdqn = load("hdqn_chain.json");
  std::vector<double> a, b;
  for (std::uint64_t seed : hybrid.seeds) a.push_back(peak(hybrid, seed));
  for (std::uint64_t seed : hdqn.seeds) b.push_back(peak(hdqn, seed));
  const int solved = static_cast<int>(std::count_if(a.begin(), a.end(), [](double x) { return x >= 400; }));
  const bool ok = a.size() == 20 && b.size() == 20 && hybrid.run.lo_step_budget == 500000 &&
                  hdqn.run.lo_step_budget == 500000 && median(a) >= 400 && median(b) <= 100;
  report("chain-hybrid-vs-hdqn", ok,
         fmt("hybrid median peak reward %.0f (%d/20 reach 400, need >= 400); h-DQN median %.0f (need <= 100)",
             median(a), solved, median(b)));
}

void mechanisms() {
  std::vector<std::string> bad;

  // Buffers stay empty through nonpositive prefixes.
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    learn::ReplayBuffer buf;
    const int len = static_cast<int>(rng.index(300));
    for (int i = 0; i < len; ++i) {
      const double r = rng.bernoulli(0.5) ? 0.0 : -rng.uniform() * 5;
      buf.add({rng.index(50) + 0ull, rng.index(4), r, rng.index(50) + 0ull, rng.bernoulli(0.1)});
      std::vector<learn::Transition> seg(1 + rng.index(5), {0, 0, -1.0, 1, false});
      buf.add_segment(seg);
    }
    if (buf.size() != 0 || buf.armed()) bad.push_back("buffer stored a nonpositive prefix");
    if (!buf.add({0, 0, 0.5, 1, true}) || buf.size() != 1) bad.push_back("buffer did not arm on a positive");
  }

  // Freeze latch at 0.90: 90/100 stays live, 91/100 freezes.
  learn::FreezeLatch latch(100, 0.90);
  for (int i = 0; i < 100; ++i) latch.record(i >= 10);
  if (latch.frozen()) bad.push_back("froze at exactly 0.90");
  if (!latch.record(true)) bad.push_back("did not freeze at 0.91");

  // Frozen subpolicies keep their Q-values in a full run.
  {
    algo::RunConfig cfg;
    cfg.algorithm = algo::Algorithm::HgDaggerQ;
    cfg.episodes = 1500;
    cfg.warm_start = 0;
    cfg.train_mazes = 40;
    cfg.test_mazes = 10;
    cfg.pool_seed = 11;
    cfg.rl.epsilon.steps = 2000;
    std::vector<std::vector<std::uint64_t>> prints;
    std::vector<std::vector<bool>> frozen;
    algo::Observer obs;
    obs.on_q_tables = [&](int, const std::vector<std::uint64_t>& fp) { prints.push_back(fp); };
    obs.on_episode = [&](const algo::EpisodeMetrics& m) { frozen.push_back(m.frozen); };
    algo::run(cfg, nullptr, &obs);
    int checked = 0;
    for (std::size_t t = 0; t + 1 < prints.size() && t + 1 < frozen.size(); ++t)
      for (std::size_t g = 0; g < frozen[t].size(); ++g)
        if (frozen[t][g]) {
          ++checked;
          if (!frozen[t + 1][g] || prints[t + 1][g] != prints[t][g]) bad.push_back("frozen Q-table changed");
        }
    if (checked == 0) bad.push_back("no subpolicy froze");
  }

  // Prioritized sampling follows p^0.6.
  {
    const std::vector<double> p = {0.1, 5.0, 1.0, 2.0, 0.5, 3.0, 0.01, 8.0, 1.5, 0.2};
    learn::ReplayParams params;
    params.capacity = p.size();
    params.alpha = 0.6;
    params.arm_on_first_positive = false;
    learn::ReplayBuffer buf(params);
    learn::Sample all;
    std::vector<double> td;
    for (std::size_t i = 0; i < p.size(); ++i) {
      buf.add({i, 0, 0.0, i, true});
      all.index.push_back(i);
      td.push_back(p[i] - params.priority_floor);
    }
    buf.update_priorities(all, td);
    Rng draw(23);
    std::vector<double> counts(p.size(), 0.0);
    for (int k = 0; k < 100000; ++k) counts[buf.sample(1, draw).index[0]] += 1.0;
    double z = 0.0, stat = 0.0;
    for (double v : p) z += std::pow(v, 0.6);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double e = 1e5 * std::pow(p[i], 0.6) / z;
      stat += (counts[i] - e) * (counts[i] - e) / e;
    }
    const boost::math::chi_squared dist(static_cast<double>(p.size() - 1));
    const double pvalue = boost::math::cdf(boost::math::complement(dist, stat));
    if (!(pvalue > 0.01)) bad.push_back(fmt("chi-square p=%.4f", pvalue));
  }

  // Double Q on a two-state chain against closed-form values.
  {
    const double gamma = 0.9;
    const std::vector<learn::Transition> world = {
        {0, 0, 0.0, 1, false}, {0, 1, 0.0, 0, true}, {1, 0, 1.0, 0, true}, {1, 1, 0.0, 1, false}};
    learn::QTable q({2, 0.5, gamma, 50});
    Rng pick(9);
    for (int i = 0; i < 20000; ++i) q.update(world[pick.index(world.size())]);
    const double err = std::max({std::abs(q.value(1, 0) - 1.0), std::abs(q.value(0, 0) - gamma),
                                 std::abs(q.value(1, 1) - gamma), std::abs(q.value(0, 1))});
    if (err >= 1e-6) bad.push_back(fmt("double-Q error %.2e", err));
  }

  std::string detail = "arming, freeze at 0.90, frozen Q-values, p^0.6 sampling, double-Q within 1e-6";
  if (!bad.empty()) detail = "failed: " + bad.front() + (bad.size() > 1 ? fmt(" (+%d more)", int(bad.size()) - 1) : "");
  report("mechanism-suite", bad.empty(), detail);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void determinism() {
  const fs::path root = fs::temp_directory_path() / "hierg_acceptance_determinism";
  fs::remove_all(root);
  int compared = 0, differing = 0;
  const char* algorithms[] = {"hbc", "hg-dagger", "hg-dagger-q", "flat-bc", "flat-dagger", "flat-q", "hdqn"};
  std::vector<nlohmann::json> docs;
  for (const char* a : algorithms)
    docs.push_back({{"schema", 1}, {"name", std::string("det_") + a}, {"algorithm", a}, {"env", "maze"},
                    {"seeds", {1, 2}}, {"episodes", 60}, {"warm_start", 10},
                    {"maze", {{"train_mazes", 50}, {"test_mazes", 10}}}});
  for (const char* a : {"hg-dagger-q", "hdqn"})
    docs.push_back({{"schema", 1}, {"name", std::string("det_chain_") + a}, {"algorithm", a}, {"env", "chain"},
                    {"seeds", {1, 2}}, {"episodes", 40}, {"warm_start", 0}});
  for (const auto& doc : docs) {
    const exp::ExperimentConfig cfg = exp::parse_config(doc);
    const fs::path x = root / (cfg.name + "_a"), y = root / (cfg.name + "_b");
    exp::run_experiment(cfg, x, 1);
    exp::run_experiment(cfg, y, 2);
    for (std::uint64_t seed : cfg.seeds) {
      const std::string f = "metrics_seed" + std::to_string(seed) + ".csv";
      ++compared;
      if (read_file(x / f) != read_file(y / f) || read_file(x / f).empty()) ++differing;
    }
  }
  fs::remove_all(root);
  report("determinism", differing == 0 && compared > 0,
         fmt("%d metrics CSVs from repeated runs, %d differ", compared, differing));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  const std::pair<const char*, std::function<void()>> criteria[] = {
      {"maze-generation", maze_generation},       {"expert-soundness", expert_soundness},
      {"theorem-verification", theorem_verification}, {"label-efficiency", label_efficiency},
      {"hi-label-flattening", label_flattening},  {"chain-hybrid-vs-hdqn", chain_comparison},
      {"mechanism-suite", mechanisms},            {"determinism", determinism}};
  for (const auto& [name, check] : criteria) {
    try {
      check();
    } catch (const std::exception& e) {
      report(name, false, std::string("threw: ") + e.what());
    }
  }
  std::printf("%d of %zu criteria failed (%.0f s)\n", failures, std::size(criteria), seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
