#include "hierg/theory.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include "hierg/learners.hpp"

namespace hierg::theory {

BoundCosts instantiate(const CostModel& model, int h_hi, int h_lo, int h_full) {
  BoundCosts c;
  c.full_inspect = model.full_inspect.charge(static_cast<std::size_t>(h_full));
  c.full_label = model.full_label.charge(static_cast<std::size_t>(h_full));
  c.hi_label = model.hi_label.charge(static_cast<std::size_t>(h_hi));
  c.lo_inspect = model.lo_inspect.charge(static_cast<std::size_t>(h_lo));
  c.lo_label = model.lo_label.charge(static_cast<std::size_t>(h_lo));
  return c;
}

void validate(const BoundParams& p) {
  if (p.T < 0) throw ConfigError("bounds: T must be nonnegative");
  if (p.size_M < 1 || p.size_Pi_lo < 1 || p.size_G < 1 || p.size_G_star < 1)
    throw ConfigError("bounds: class sizes and subgoal counts must be at least 1");
  if (p.size_G_star > p.size_G) throw ConfigError("bounds: size_G_star exceeds size_G");
  if (p.H_hi < 1 || p.H_lo < 1 || p.H_full < 1) throw ConfigError("bounds: horizons must be at least 1");
}

double bound_hier(const BoundParams& p) {
  validate(p);
  const auto& c = p.costs;
  const double lo_mistakes = p.size_G_star * std::log2(p.size_Pi_lo);
  return p.T * c.full_inspect + (std::log2(p.size_M) + lo_mistakes) * (c.hi_label + p.H_hi * c.lo_inspect) +
         lo_mistakes * c.lo_label;
}

double bound_flat(const BoundParams& p) {
  validate(p);
  const auto& c = p.costs;
  return p.T * c.full_inspect + (std::log2(p.size_M) + p.size_G * std::log2(p.size_Pi_lo)) * c.full_label;
}

double cost_ratio(const BoundParams& p) {
  const auto& c = p.costs;
  if (c.full_label == 0.0) throw DivisionByZero("cost ratio: C_full^L is zero");
  return (c.hi_label + p.H_hi * c.lo_inspect + c.lo_label) / c.full_label;
}

// --- instances ------------------------------------------------------------------

std::vector<int> SyntheticInstance::used_subgoals() const {
  const auto& mu = meta_class.at(expert_meta);
  std::set<int> used(mu.begin(), mu.end());
  return {used.begin(), used.end()};
}

void SyntheticInstance::check() const {
  if (expert_meta < 0 || expert_meta >= static_cast<int>(meta_class.size()))
    throw RealizabilityViolated("instance: expert meta policy outside its class");
  if (static_cast<int>(expert_lo.size()) != subgoals)
    throw RealizabilityViolated("instance: expert needs one subpolicy per subgoal");
  for (int k : expert_lo)
    if (k < 0 || k >= static_cast<int>(lo_class.size()))
      throw RealizabilityViolated("instance: expert subpolicy outside its class");
}

namespace {

std::size_t count_maps(int domain, int range, std::size_t cap) {
  std::size_t n = 1;
  for (int i = 0; i < domain; ++i) {
    if (n > cap / static_cast<std::size_t>(range)) return cap + 1;
    n *= static_cast<std::size_t>(range);
  }
  return n;
}

std::vector<int> decode(std::uint64_t index, int domain, int range) {
  std::vector<int> out(domain);
  for (int i = 0; i < domain; ++i) {
    out[i] = static_cast<int>(index % static_cast<std::uint64_t>(range));
    index /= static_cast<std::uint64_t>(range);
  }
  return out;
}

std::uint64_t encode(const std::vector<int>& map, int range) {
  std::uint64_t index = 0;
  for (auto it = map.rbegin(); it != map.rend(); ++it) index = index * static_cast<std::uint64_t>(range) + *it;
  return index;
}

// All maps domain -> range when there are at most `cap`, else `cap` distinct
// random ones including `must`. Returns the class and the index of `must`.
std::pair<std::vector<std::vector<int>>, int> enumerate_class(int domain, int range, std::size_t cap,
                                                              const std::vector<int>& must, Rng& rng) {
  const std::size_t total = count_maps(domain, range, cap);
  std::vector<std::uint64_t> ids;
  if (total <= cap) {
    for (std::uint64_t i = 0; i < total; ++i) ids.push_back(i);
  } else {
    std::uint64_t full = 1;
    for (int i = 0; i < domain; ++i) full *= static_cast<std::uint64_t>(range);
    std::set<std::uint64_t> picked{encode(must, range)};
    while (picked.size() < cap) picked.insert(rng.below(full));
    ids.assign(picked.begin(), picked.end());
  }
  std::vector<std::vector<int>> cls;
  int at = -1;
  const std::uint64_t want = encode(must, range);
  for (std::uint64_t id : ids) {
    if (id == want) at = static_cast<int>(cls.size());
    cls.push_back(decode(id, domain, range));
  }
  return {std::move(cls), at};
}

int draw(Rng& rng, int lo, int hi) { return lo + rng.index(static_cast<std::size_t>(hi - lo + 1)); }

}  // namespace

SyntheticInstance make_instance(std::uint64_t seed, const InstanceOptions& opts) {
  Rng rng(mix_seed(seed, 0x7e0));
  SyntheticInstance inst;
  inst.seed = seed;
  for (;;) {
    inst.rooms = draw(rng, opts.min_rooms, opts.max_rooms);
    inst.cells = draw(rng, opts.min_cells, opts.max_cells);
    inst.actions = draw(rng, opts.min_actions, opts.max_actions);
    inst.subgoals = draw(rng, opts.min_subgoals, opts.max_subgoals);
    const std::size_t m = std::min(count_maps(inst.rooms, inst.subgoals, opts.meta_cap), opts.meta_cap);
    const std::size_t pi = std::min(count_maps(inst.cells, inst.actions, opts.lo_cap), opts.lo_cap);
    std::size_t product = m;
    bool fits = true;
    for (int g = 0; g < inst.subgoals && fits; ++g) {
      if (product > opts.product_cap / pi) fits = false;
      product *= pi;
    }
    if (fits && product <= opts.product_cap) break;
  }
  inst.h_lo = inst.cells;
  inst.h_hi = inst.rooms + 2;

  const int decisions = inst.rooms * inst.cells * inst.actions;
  inst.next.resize(decisions);
  for (int& n : inst.next) {
    const double u = rng.uniform();
    if (u < 0.2) n = SyntheticInstance::exit_code(rng.index(2));
    else if (u < 0.23) n = SyntheticInstance::kLava;
    else n = rng.index(inst.cells);
  }
  inst.exits.resize(inst.rooms * 2);
  for (int r = 0; r < inst.rooms; ++r)
    for (int k = 0; k < 2; ++k)
      inst.exits[r * 2 + k] = rng.bernoulli(0.15) ? SyntheticInstance::kGoal : rng.index(inst.rooms);

  // The expert uses a random nonempty subset of the subgoals.
  std::vector<int> used;
  while (used.empty())
    for (int g = 0; g < inst.subgoals; ++g)
      if (rng.bernoulli(0.7)) used.push_back(g);
  std::vector<int> mu(inst.rooms);
  for (int& g : mu) g = used[rng.index(used.size())];
  auto [meta, meta_at] = enumerate_class(inst.rooms, inst.subgoals, opts.meta_cap, mu, rng);
  inst.meta_class = std::move(meta);
  inst.expert_meta = meta_at;

  std::vector<int> pi(inst.cells);
  for (int& a : pi) a = rng.index(inst.actions);
  auto [lo, lo_at] = enumerate_class(inst.cells, inst.actions, opts.lo_cap, pi, rng);
  inst.lo_class = std::move(lo);
  inst.expert_lo.resize(inst.subgoals);
  inst.expert_lo[0] = lo_at;
  for (int g = 1; g < inst.subgoals; ++g) inst.expert_lo[g] = rng.index(inst.lo_class.size());
  inst.check();
  return inst;
}

// --- verification -----------------------------------------------------------------

namespace {

struct Visit {
  int room = 0;
  int g = 0;
  std::vector<std::pair<int, int>> steps;  // (cell, action)
};

using Episode = std::vector<Visit>;

std::vector<int> actions_of(const Episode& ep) {
  std::vector<int> out;
  for (const auto& v : ep)
    for (auto [c, a] : v.steps) out.push_back(a);
  return out;
}

std::size_t length_of(const Episode& ep) {
  std::size_t n = 0;
  for (const auto& v : ep) n += v.steps.size();
  return n;
}

// Plays one episode. `choose(room)` picks the visit's subgoal and
// `act(room, g, cell)` the action; the flat learner ignores g.
Episode rollout(const SyntheticInstance& inst, int room, const std::function<int(int)>& choose,
                const std::function<int(int, int, int)>& act) {
  Episode ep;
  for (int h = 0; h < inst.h_hi; ++h) {
    Visit v{room, choose(room), {}};
    int cell = 0;
    int exit = -1;
    bool over = false;
    for (int k = 0; k < inst.h_lo; ++k) {
      const int a = act(room, v.g, cell);
      v.steps.emplace_back(cell, a);
      const int n = inst.next[(room * inst.cells + cell) * inst.actions + a];
      if (n == SyntheticInstance::kLava) {
        over = true;
        break;
      }
      if (n < 0) {
        exit = -2 - n;
        break;
      }
      cell = n;
    }
    ep.push_back(std::move(v));
    if (over || exit < 0) break;  // lava, or stuck for h_lo steps
    room = inst.exits[room * 2 + exit];
    if (room == SyntheticInstance::kGoal) break;
  }
  return ep;
}

Episode expert_rollout(const SyntheticInstance& inst, int start) {
  const auto& mu = inst.meta_class[inst.expert_meta];
  return rollout(
      inst, start, [&](int r) { return mu[r]; },
      [&](int, int g, int c) { return inst.lo_class[inst.expert_lo[g]][c]; });
}

// Feeds labeled examples to a halving learner, those it currently gets wrong
// first. The learner acted on its pre-update majority, so a failing episode
// always yields at least one counted mistake.
void teach(learn::VersionSpace& vs, const std::vector<std::pair<int, int>>& examples) {
  std::vector<std::pair<int, int>> wrong, right;
  for (const auto& e : examples) (vs.predict(e.first) != e.second ? wrong : right).push_back(e);
  for (const auto& [x, y] : wrong) vs.update(x, y);
  for (const auto& [x, y] : right) vs.update(x, y);
}

bool halves(const learn::VersionSpace& vs) {
  for (auto [before, after] : vs.mistake_log())
    if (2 * after > before) return false;
  return true;
}

std::string fmt(double x) {
  std::ostringstream out;
  out << x;
  return out.str();
}

}  // namespace

VerifyReport verify_bounds(const SyntheticInstance& inst, int T, const CostModel& model) {
  inst.check();
  VerifyReport rep;
  rep.seed = inst.seed;
  rep.episodes = T;
  BoundParams& p = rep.params;
  p.T = T;
  p.size_M = static_cast<double>(inst.meta_class.size());
  p.size_Pi_lo = static_cast<double>(inst.lo_class.size());
  p.size_G = inst.subgoals;
  p.size_G_star = static_cast<int>(inst.used_subgoals().size());
  p.H_hi = inst.h_hi;
  p.H_lo = inst.h_lo;
  p.H_full = inst.h_full();
  p.costs = instantiate(model, p.H_hi, p.H_lo, p.H_full);
  rep.hier_bound = bound_hier(p);
  rep.flat_bound = bound_flat(p);

  // Both learners see the same sequence of start rooms.
  std::vector<int> starts(T + 1);
  std::vector<std::vector<int>> expert_actions(T + 1);
  Rng start_rng(mix_seed(inst.seed, 0x57a));
  for (int t = 1; t <= T; ++t) {
    starts[t] = start_rng.index(inst.rooms);
    expert_actions[t] = actions_of(expert_rollout(inst, starts[t]));
  }
  const auto& mu_star = inst.meta_class[inst.expert_meta];
  auto pi_star = [&](int g, int c) { return inst.lo_class[inst.expert_lo[g]][c]; };

  // hg-DAgger.
  {
    CostLedger ledger(model);
    learn::VersionSpace meta(inst.meta_class, inst.subgoals);
    std::vector<learn::VersionSpace> lo(inst.subgoals, learn::VersionSpace(inst.lo_class, inst.actions));
    int last_failure = 0;
    for (int t = 1; t <= T; ++t) {
      ledger.begin_episode(t);
      const Episode ep = rollout(
          inst, starts[t], [&](int r) { return meta.predict(r); }, [&](int, int g, int c) { return lo[g].predict(c); });
      ledger.charge(OpKind::Inspect, Level::Full, length_of(ep));
      if (actions_of(ep) == expert_actions[t]) continue;
      ++rep.hier_failures;
      last_failure = t;
      ledger.charge(OpKind::Label, Level::Hi, ep.size());
      std::vector<std::pair<int, int>> hi;
      for (const auto& v : ep) hi.emplace_back(v.room, mu_star[v.room]);
      for (std::size_t h = 0; h < ep.size(); ++h) {
        const Visit& v = ep[h];
        if (v.g != hi[h].second) break;
        ledger.charge(OpKind::Inspect, Level::Lo, v.steps.size());
        bool agrees = true;
        for (auto [c, a] : v.steps) agrees = agrees && a == pi_star(v.g, c);
        if (agrees) continue;
        ledger.charge(OpKind::Label, Level::Lo, v.steps.size());
        ++rep.lo_labels;
        std::vector<std::pair<int, int>> labels;
        for (auto [c, a] : v.steps) labels.emplace_back(c, pi_star(v.g, c));
        teach(lo[v.g], labels);
        break;
      }
      teach(meta, hi);
    }
    rep.hier_cost = ledger.total();
    rep.hi_mistakes = meta.mistakes();
    rep.halving_ok = rep.halving_ok && halves(meta);
    for (const auto& vs : lo) {
      rep.lo_mistakes.push_back(vs.mistakes());
      rep.halving_ok = rep.halving_ok && halves(vs);
    }
    rep.hier_converged = last_failure < T;
  }

  // Flat DAgger over M x Pi_lo^G, as explicit tables over (room, cell).
  {
    std::vector<std::vector<int>> product;
    const std::size_t pi = inst.lo_class.size();
    std::vector<std::size_t> combo(inst.subgoals, 0);
    for (const auto& mu : inst.meta_class) {
      std::fill(combo.begin(), combo.end(), 0);
      for (;;) {
        std::vector<int> table(inst.rooms * inst.cells);
        for (int r = 0; r < inst.rooms; ++r)
          for (int c = 0; c < inst.cells; ++c) table[r * inst.cells + c] = inst.lo_class[combo[mu[r]]][c];
        product.push_back(std::move(table));
        int g = 0;
        while (g < inst.subgoals && ++combo[g] == pi) combo[g++] = 0;
        if (g == inst.subgoals) break;
      }
    }
    CostLedger ledger(model);
    learn::VersionSpace flat(std::move(product), inst.actions);
    int last_failure = 0;
    for (int t = 1; t <= T; ++t) {
      ledger.begin_episode(t);
      const Episode ep = rollout(
          inst, starts[t], [](int) { return 0; }, [&](int r, int, int c) { return flat.predict(r * inst.cells + c); });
      const std::size_t n = length_of(ep);
      ledger.charge(OpKind::Inspect, Level::Full, n);
      if (actions_of(ep) == expert_actions[t]) continue;
      ++rep.flat_failures;
      last_failure = t;
      ledger.charge(OpKind::Label, Level::Full, n);
      std::vector<std::pair<int, int>> labels;
      for (const auto& v : ep)
        for (auto [c, a] : v.steps) labels.emplace_back(v.room * inst.cells + c, pi_star(mu_star[v.room], c));
      teach(flat, labels);
    }
    rep.flat_cost = ledger.total();
    rep.flat_mistakes = flat.mistakes();
    rep.halving_ok = rep.halving_ok && halves(flat);
    rep.flat_converged = last_failure < T;
  }

  // Mistake counts are integers, so compare against the floor of log2.
  const double tol = 1e-9;
  auto& bad = rep.violations;
  if (rep.hier_cost > rep.hier_bound + tol)
    bad.push_back("hg-DAgger cost " + fmt(rep.hier_cost) + " exceeds bound " + fmt(rep.hier_bound));
  if (rep.flat_cost > rep.flat_bound + tol)
    bad.push_back("flat DAgger cost " + fmt(rep.flat_cost) + " exceeds bound " + fmt(rep.flat_bound));
  if (rep.hi_mistakes > std::log2(p.size_M) + tol)
    bad.push_back("HI mistakes " + std::to_string(rep.hi_mistakes) + " exceed log2|M|");
  for (int g = 0; g < inst.subgoals; ++g)
    if (rep.lo_mistakes[g] > std::log2(p.size_Pi_lo) + tol)
      bad.push_back("subgoal " + std::to_string(g) + " mistakes " + std::to_string(rep.lo_mistakes[g]) +
                    " exceed log2|Pi_lo|");
  if (rep.flat_mistakes > std::log2(p.size_M) + p.size_G * std::log2(p.size_Pi_lo) + tol)
    bad.push_back("flat mistakes " + std::to_string(rep.flat_mistakes) + " exceed log2|Pi_full|");
  if (rep.hier_failures > rep.hi_mistakes + std::accumulate(rep.lo_mistakes.begin(), rep.lo_mistakes.end(), 0))
    bad.push_back("a failing hg-DAgger episode produced no counted mistake");
  if (!rep.halving_ok) bad.push_back("a counted mistake did not halve its version space");
  return rep;
}

std::string VerifyReport::to_text() const {
  std::ostringstream out;
  const auto& p = params;
  out << "instance " << seed << ": T=" << episodes << " |M|=" << p.size_M << " |Pi_lo|=" << p.size_Pi_lo
      << " |G|=" << p.size_G << " |G*|=" << p.size_G_star << " H_hi=" << p.H_hi << " H_lo=" << p.H_lo << "\n";
  out << "  hg-dagger   cost " << hier_cost << " bound " << hier_bound << " margin " << hier_bound - hier_cost
      << " failures " << hier_failures << " hi_mistakes " << hi_mistakes << "/" << std::log2(p.size_M)
      << " lo_mistakes [";
  for (std::size_t g = 0; g < lo_mistakes.size(); ++g) out << (g ? " " : "") << lo_mistakes[g];
  out << "]/" << std::log2(p.size_Pi_lo) << " lo_labels " << lo_labels
      << (hier_converged ? "" : " (still failing at T)") << "\n";
  out << "  flat-dagger cost " << flat_cost << " bound " << flat_bound << " margin " << flat_bound - flat_cost
      << " failures " << flat_failures << " mistakes " << flat_mistakes
      << (flat_converged ? "" : " (still failing at T)") << "\n";
  if (violations.empty()) out << "  ok\n";
  for (const auto& v : violations) out << "  VIOLATION " << v << "\n";
  return out.str();
}

void require_within_bounds(const VerifyReport& r) {
  if (r.ok()) return;
  std::string msg = "instance " + std::to_string(r.seed) + ":";
  for (const auto& v : r.violations) msg += " " + v + ";";
  throw BoundViolated(msg);
}

}  // namespace hierg::theory
