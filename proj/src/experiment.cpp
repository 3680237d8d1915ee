#include "hierg/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

namespace hierg::exp {

using nlohmann::json;

namespace {

// Walks one JSON object, remembering which keys were read so that leftovers
// can be reported as unknown.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    const json* v = find(key);
    if (!v) return;
    const std::string at = name(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v->is_boolean()) throw ConfigError(at + ": expected true or false");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v->is_number_integer()) throw ConfigError(at + ": expected an integer");
      if (std::is_unsigned_v<T> && v->is_number_integer() && v->get<long long>() < 0 && !v->is_number_unsigned())
        throw ConfigError(at + ": expected a nonnegative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v->is_number()) throw ConfigError(at + ": expected a number");
    } else {
      if (!v->is_string()) throw ConfigError(at + ": expected a string");
    }
    out = v->get<T>();
  }

  void get_cost(const char* key, OpCost& out) {
    const json* v = find(key);
    if (!v) return;
    if (v->is_string() && *v == "steps") out = OpCost::steps();
    else if (v->is_number() && v->get<double>() >= 0) out = OpCost::fixed(v->get<double>());
    else throw ConfigError(name(key) + ": expected a nonnegative number or \"steps\"");
  }

  std::optional<Reader> child(const char* key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    return Reader(*v, name(key));
  }

  const json* raw(const char* key) { return find(key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(name(it.key()) + ": unknown key");
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  const json* find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_epsilon(Reader& r, learn::EpsilonSchedule& e) {
  r.get("start", e.start);
  r.get("end", e.end);
  r.get("steps", e.steps);
  r.finish();
}

json epsilon_json(const learn::EpsilonSchedule& e) {
  return {{"start", e.start}, {"end", e.end}, {"steps", e.steps}};
}

json cost_json(const OpCost& c) { return c.per_step ? json("steps") : json(c.constant); }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig cfg;
  Reader r(doc, "");
  int schema = -1;
  r.get("schema", schema);
  if (schema != kConfigSchema)
    throw ConfigError("schema: expected " + std::to_string(kConfigSchema) +
                      (schema < 0 ? " (missing)" : ", got " + std::to_string(schema)));
  r.get("name", cfg.name);
  if (cfg.name.empty() || cfg.name.find_first_of("/\\") != std::string::npos)
    throw ConfigError("name: must be a nonempty plain file name");

  auto& rc = cfg.run;
  std::string algorithm = to_string(rc.algorithm), env = to_string(rc.env), expert = "synthetic";
  r.get("algorithm", algorithm);
  r.get("env", env);
  r.get("expert", expert);
  const auto a = algo::parse_algorithm(algorithm);
  if (!a) throw ConfigError("algorithm: unknown algorithm '" + algorithm + "'");
  const auto e = algo::parse_env(env);
  if (!e) throw ConfigError("env: unknown environment '" + env + "'");
  rc.algorithm = *a;
  rc.env = *e;
  if (expert == "synthetic") cfg.expert = ExpertMode::Synthetic;
  else if (expert == "human") cfg.expert = ExpertMode::Human;
  else throw ConfigError("expert: expected \"synthetic\" or \"human\"");

  if (const json* seeds = r.raw("seeds")) {
    if (!seeds->is_array() || seeds->empty()) throw ConfigError("seeds: expected a nonempty list");
    cfg.seeds.clear();
    for (const auto& s : *seeds) {
      if (!s.is_number_unsigned() && (!s.is_number_integer() || s.get<std::int64_t>() < 0))
        throw ConfigError("seeds: entries must be nonnegative integers");
      cfg.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  r.get("episodes", rc.episodes);
  r.get("warm_start", rc.warm_start);
  r.get("output_dir", cfg.output_dir);
  r.get("lo_step_budget", rc.lo_step_budget);
  r.get("head_start", rc.head_start);
  r.get("stop_when_solved", rc.stop_when_solved);
  r.get("window", rc.window);

  if (auto c = r.child("costs")) {
    c->get_cost("full_inspect", rc.costs.full_inspect);
    c->get_cost("full_label", rc.costs.full_label);
    c->get_cost("hi_label", rc.costs.hi_label);
    c->get_cost("lo_inspect", rc.costs.lo_inspect);
    c->get_cost("lo_label", rc.costs.lo_label);
    c->finish();
  }
  if (auto m = r.child("maze")) {
    m->get("pool_seed", rc.pool_seed);
    m->get("train_mazes", rc.train_mazes);
    m->get("test_mazes", rc.test_mazes);
    m->get("min_dist", rc.min_dist);
    if (auto h = m->child("horizons")) {
      h->get("full", rc.horizons.full);
      h->get("hi", rc.horizons.hi);
      h->get("lo", rc.horizons.lo);
      h->finish();
    }
    m->finish();
  }
  if (auto c = r.child("classifier")) {
    c->get("epochs", rc.classifier.epochs);
    c->get("l2", rc.classifier.l2);
    c->finish();
  }
  if (auto q = r.child("rl")) {
    q->get("alpha", rc.rl.alpha);
    q->get("gamma", rc.rl.gamma);
    q->get("target_period", rc.rl.target_period);
    q->get("batch", rc.rl.batch);
    q->get("train_every", rc.rl.train_every);
    q->get("freeze_threshold", rc.rl.freeze_threshold);
    q->get("freeze_window", rc.rl.freeze_window);
    q->get("lo_cap", rc.rl.lo_cap);
    if (auto eps = q->child("epsilon")) read_epsilon(*eps, rc.rl.epsilon);
    if (auto rp = q->child("replay")) {
      auto& p = rc.rl.replay;
      rp->get("capacity", p.capacity);
      rp->get("prioritized", p.prioritized);
      rp->get("alpha", p.alpha);
      rp->get("beta0", p.beta0);
      rp->get("beta_steps", p.beta_steps);
      rp->get("priority_floor", p.priority_floor);
      rp->get("arm_on_first_positive", p.arm_on_first_positive);
      rp->finish();
    }
    q->finish();
  }
  if (auto m = r.child("meta")) {
    m->get("alpha", rc.meta.alpha);
    m->get("gamma", rc.meta.gamma);
    if (auto eps = m->child("epsilon")) read_epsilon(*eps, rc.meta.epsilon);
    m->finish();
  }
  r.finish();

  if (rc.episodes < 0) throw ConfigError("episodes: must be nonnegative");
  if (rc.warm_start < 0 || rc.warm_start > rc.episodes) throw ConfigError("warm_start: must lie in [0, episodes]");
  if (rc.window <= 0) throw ConfigError("window: must be positive");
  if (rc.train_mazes <= 0 || rc.test_mazes <= 0) throw ConfigError("maze: pools must be nonempty");
  if (rc.rl.batch == 0 || rc.rl.train_every <= 0) throw ConfigError("rl: batch and train_every must be positive");
  if (rc.head_start < 0 || rc.head_start > 1) throw ConfigError("head_start: must lie in [0, 1]");
  const bool chain_ok = rc.algorithm == algo::Algorithm::HgDaggerQ || rc.algorithm == algo::Algorithm::HDQN ||
                        rc.algorithm == algo::Algorithm::FlatQ;
  if (rc.env == algo::EnvKind::Chain && !chain_ok)
    throw ConfigError(std::string("algorithm: ") + to_string(rc.algorithm) + " does not run on the chain");
  if (cfg.expert == ExpertMode::Human && rc.algorithm != algo::Algorithm::HgDagger)
    throw ConfigError("expert: a human expert is only supported for hg-dagger");

  cfg.hash = config_hash(cfg);
  rc.config_hash = cfg.hash;
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& cfg) {
  const auto& rc = cfg.run;
  const auto& p = rc.rl.replay;
  return {
      {"schema", kConfigSchema},
      {"name", cfg.name},
      {"algorithm", to_string(rc.algorithm)},
      {"env", to_string(rc.env)},
      {"expert", cfg.expert == ExpertMode::Human ? "human" : "synthetic"},
      {"seeds", cfg.seeds},
      {"episodes", rc.episodes},
      {"warm_start", rc.warm_start},
      {"output_dir", cfg.output_dir},
      {"lo_step_budget", rc.lo_step_budget},
      {"head_start", rc.head_start},
      {"stop_when_solved", rc.stop_when_solved},
      {"window", rc.window},
      {"costs",
       {{"full_inspect", cost_json(rc.costs.full_inspect)},
        {"full_label", cost_json(rc.costs.full_label)},
        {"hi_label", cost_json(rc.costs.hi_label)},
        {"lo_inspect", cost_json(rc.costs.lo_inspect)},
        {"lo_label", cost_json(rc.costs.lo_label)}}},
      {"maze",
       {{"pool_seed", rc.pool_seed},
        {"train_mazes", rc.train_mazes},
        {"test_mazes", rc.test_mazes},
        {"min_dist", rc.min_dist},
        {"horizons", {{"full", rc.horizons.full}, {"hi", rc.horizons.hi}, {"lo", rc.horizons.lo}}}}},
      {"classifier", {{"epochs", rc.classifier.epochs}, {"l2", rc.classifier.l2}}},
      {"rl",
       {{"alpha", rc.rl.alpha},
        {"gamma", rc.rl.gamma},
        {"target_period", rc.rl.target_period},
        {"batch", rc.rl.batch},
        {"train_every", rc.rl.train_every},
        {"freeze_threshold", rc.rl.freeze_threshold},
        {"freeze_window", rc.rl.freeze_window},
        {"lo_cap", rc.rl.lo_cap},
        {"epsilon", epsilon_json(rc.rl.epsilon)},
        {"replay",
         {{"capacity", p.capacity},
          {"prioritized", p.prioritized},
          {"alpha", p.alpha},
          {"beta0", p.beta0},
          {"beta_steps", p.beta_steps},
          {"priority_floor", p.priority_floor},
          {"arm_on_first_positive", p.arm_on_first_positive}}}}},
      {"meta", {{"alpha", rc.meta.alpha}, {"gamma", rc.meta.gamma}, {"epsilon", epsilon_json(rc.meta.epsilon)}}},
  };
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("seeds");
  j.erase("output_dir");
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << fnv1a(j.dump());
  return out.str();
}

fs::path data_dir() {
  const char* env = std::getenv("HIERG_DATA_DIR");
  return env && *env ? fs::path(env) : fs::path("hierg-data");
}

fs::path output_dir(const ExperimentConfig& cfg) {
  return cfg.output_dir.empty() ? data_dir() / cfg.name : fs::path(cfg.output_dir);
}

std::string preamble(const std::string& hash, std::uint64_t seed) {
  return std::string("# hierg ") + kCodeVersion + " config=" + hash + " seed=" + std::to_string(seed) + "\n";
}

// --- running ----------------------------------------------------------------------

namespace {

SeedSummary summarize_seed(std::uint64_t seed, const algo::RunResult& r) {
  SeedSummary s;
  s.seed = seed;
  s.episodes = static_cast<int>(r.log.size());
  s.stopped_early = r.stopped_early;
  if (!r.log.empty()) {
    const auto& last = r.log.back();
    s.final_trailing_success = last.trailing_success;
    s.final_trailing_reward = last.trailing_reward;
    s.lo_steps = last.lo_steps;
    for (const auto& m : r.log.rows()) s.peak_trailing_reward = std::max(s.peak_trailing_reward, m.trailing_reward);
  }
  s.inspect_cost = r.ledger.inspect_cost();
  s.label_cost = r.ledger.label_cost();
  s.total_cost = r.ledger.total();
  return s;
}

json summary_json(const SeedSummary& s) {
  return {{"seed", s.seed},
          {"episodes", s.episodes},
          {"stopped_early", s.stopped_early},
          {"final_trailing_success", s.final_trailing_success},
          {"final_trailing_reward", s.final_trailing_reward},
          {"peak_trailing_reward", s.peak_trailing_reward},
          {"lo_steps", s.lo_steps},
          {"inspect_cost", s.inspect_cost},
          {"label_cost", s.label_cost},
          {"total_cost", s.total_cost}};
}

}  // namespace

json run_experiment(const ExperimentConfig& cfg, const fs::path& out, int jobs) {
  if (cfg.expert == ExpertMode::Human)
    throw ConfigError("expert: human-expert runs go through the serve verb");
  fs::create_directories(out);
  write_file(out / "config.json", to_json(cfg).dump(2) + "\n");

  std::vector<SeedSummary> summaries(cfg.seeds.size());
  std::vector<std::string> errors(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < cfg.seeds.size();) {
      try {
        algo::RunConfig rc = cfg.run;
        rc.seed = cfg.seeds[i];
        rc.config_hash = cfg.hash;
        const algo::RunResult r = algo::run(rc);
        const std::string tag = "seed" + std::to_string(rc.seed);
        write_file(out / ("metrics_" + tag + ".csv"), r.log.to_csv());
        write_file(out / ("ledger_" + tag + ".csv"), preamble(cfg.hash, rc.seed) + r.ledger.to_csv());
        write_file(out / ("checkpoint_" + tag + ".json"), r.checkpoint.dump(1) + "\n");
        summaries[i] = summarize_seed(rc.seed, r);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(cfg.seeds.size())));
  std::vector<std::thread> pool;
  for (int k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) throw Error("seed " + std::to_string(cfg.seeds[i]) + ": " + errors[i]);

  json seeds = json::array();
  std::vector<double> finals;
  for (const auto& s : summaries) {
    seeds.push_back(summary_json(s));
    finals.push_back(s.final_trailing_success);
  }
  const Stat st = summarize(finals);
  json summary = {{"version", kCodeVersion},
                  {"config_hash", cfg.hash},
                  {"name", cfg.name},
                  {"algorithm", to_string(cfg.run.algorithm)},
                  {"env", to_string(cfg.run.env)},
                  {"seeds", seeds},
                  {"final_trailing_success", {{"median", st.median}, {"min", st.min}, {"max", st.max}}}};
  write_file(out / "summary.json", summary.dump(2) + "\n");
  return summary;
}

// --- compare --------------------------------------------------------------------

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string field(const std::string& preamble, const std::string& key) {
  const auto at = preamble.find(" " + key + "=");
  if (at == std::string::npos) return {};
  const auto from = at + key.size() + 2;
  return preamble.substr(from, preamble.find(' ', from) - from);
}

SeedSeries read_metrics(const fs::path& path, std::string& algorithm, std::string& env) {
  std::istringstream in(read_file(path));
  std::string pre, header, line;
  std::getline(in, pre);
  std::getline(in, header);
  if (pre.rfind("# hierg ", 0) != 0) throw ParseError(path.string() + ": missing preamble");
  SeedSeries s;
  s.config_hash = field(pre, "config");
  s.seed = std::stoull(field(pre, "seed"));
  algorithm = field(pre, "algorithm");
  env = field(pre, "env");
  const auto cols = split(header, ',');
  auto col = [&](const char* name) {
    const auto it = std::find(cols.begin(), cols.end(), name);
    if (it == cols.end()) throw ParseError(path.string() + ": no column " + name);
    return static_cast<std::size_t>(it - cols.begin());
  };
  const std::size_t ts = col("trailing_success"), tr = col("trailing_reward"), hi = col("hi_labels_cum"),
                    lo = col("lo_labels_cum"), full = col("full_labels_cum"), total = col("total_cost_cum");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto v = split(line, ',');
    if (v.size() != cols.size()) throw ParseError(path.string() + ": ragged row");
    s.trailing_success.push_back(std::stod(v[ts]));
    s.trailing_reward.push_back(std::stod(v[tr]));
    s.label_cost.push_back(std::stod(v[hi]) + std::stod(v[lo]) + std::stod(v[full]));
    s.lo_label_cost.push_back(std::stod(v[lo]) + std::stod(v[full]));
    s.total_cost.push_back(std::stod(v[total]));
  }
  return s;
}

}  // namespace

RunSeries load_run(const fs::path& dir, bool force) {
  RunSeries run;
  run.dir = dir;
  run.name = dir.filename().string();
  if (run.name.empty()) run.name = dir.parent_path().filename().string();
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string f = entry.path().filename().string();
    if (f.rfind("metrics_seed", 0) == 0 && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  if (files.empty()) throw IncompatibleRuns(dir.string() + ": no metrics files");
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::string algorithm, env;
    run.seeds.push_back(read_metrics(f, algorithm, env));
    if (run.algorithm.empty()) {
      run.algorithm = algorithm;
      run.env = env;
    } else if (algorithm != run.algorithm || env != run.env) {
      throw IncompatibleRuns(dir.string() + ": files from different algorithms or environments");
    }
    if (!force && run.seeds.back().config_hash != run.seeds.front().config_hash)
      throw IncompatibleRuns(dir.string() + ": mixed config hashes (use --force to compare anyway)");
  }
  std::sort(run.seeds.begin(), run.seeds.end(), [](const auto& a, const auto& b) { return a.seed < b.seed; });
  return run;
}

Stat summarize(std::vector<double> xs) {
  Stat s;
  s.n = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  s.median = n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
  s.min = xs.front();
  s.max = xs.back();
  return s;
}

std::vector<double> cost_to_reach(const RunSeries& run, double level, bool lo_only) {
  std::vector<double> out;
  for (const auto& s : run.seeds) {
    const auto& cost = lo_only ? s.lo_label_cost : s.label_cost;
    for (std::size_t t = 0; t < s.trailing_success.size(); ++t)
      if (s.trailing_success[t] >= level) {
        out.push_back(cost[t]);
        break;
      }
  }
  return out;
}

namespace {

std::string fmt_stat(const Stat& s) {
  if (s.n == 0) return "-";
  std::ostringstream out;
  out << fmt_num(s.median) << " [" << fmt_num(s.min) << ", " << fmt_num(s.max) << "]";
  return out.str();
}

void check_comparable(const std::vector<RunSeries>& runs) {
  if (runs.size() < 2) throw IncompatibleRuns("compare needs at least two runs");
  for (const auto& r : runs)
    if (r.env != runs.front().env)
      throw IncompatibleRuns("runs use different environments: " + runs.front().env + " and " + r.env);
}

}  // namespace

std::string comparison_table(const std::vector<RunSeries>& runs, const std::vector<double>& levels) {
  check_comparable(runs);
  std::ostringstream out;
  out << "env " << runs.front().env << "; values are median [min, max] over seeds\n";
  out << "run\talgorithm\tseeds\tfinal_trailing_success\tfinal_trailing_reward\ttotal_cost";
  for (double l : levels) out << "\tlo_label_cost@" << fmt_num(l);
  out << "\n";
  for (const auto& r : runs) {
    std::vector<double> fs_, fr, tc;
    for (const auto& s : r.seeds) {
      if (s.trailing_success.empty()) continue;
      fs_.push_back(s.trailing_success.back());
      fr.push_back(s.trailing_reward.back());
      tc.push_back(s.total_cost.back());
    }
    out << r.name << "\t" << r.algorithm << "\t" << r.seeds.size() << "\t" << fmt_stat(summarize(fs_)) << "\t"
        << fmt_stat(summarize(fr)) << "\t" << fmt_stat(summarize(tc));
    for (double l : levels) {
      const Stat st = summarize(cost_to_reach(r, l, true));
      out << "\t" << fmt_stat(st) << " (" << st.n << "/" << r.seeds.size() << ")";
    }
    out << "\n";
  }
  return out.str();
}

std::string learning_curve_svg(const std::vector<RunSeries>& runs, CurveAxis axis) {
  check_comparable(runs);
  constexpr double W = 760, H = 440, L = 70, R = 170, T = 30, B = 60;
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

  double xmax = 1;
  for (const auto& r : runs)
    for (const auto& s : r.seeds)
      xmax = std::max(xmax, axis == CurveAxis::Episode ? static_cast<double>(s.trailing_success.size())
                                                       : (s.total_cost.empty() ? 0.0 : s.total_cost.back()));
  auto px = [&](double x) { return L + (W - L - R) * x / xmax; };
  auto py = [&](double y) { return H - B - (H - T - B) * y; };

  std::ostringstream svg;
  svg << std::fixed << std::setprecision(1);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << py(0) << "\" x2=\"" << W - R << "\" y2=\"" << py(0)
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << py(0) << "\" x2=\"" << L << "\" y2=\"" << py(1)
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double y = k / 5.0, x = xmax * k / 5.0;
    svg << "<text x=\"" << L - 8 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << fmt_num(y)
        << "</text>\n";
    svg << "<text x=\"" << px(x) << "\" y=\"" << py(0) + 18 << "\" text-anchor=\"middle\">"
        << fmt_num(std::round(x)) << "</text>\n";
  }
  svg << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">"
      << (axis == CurveAxis::Episode ? "episode" : "expert cost") << "</text>\n";
  svg << "<text transform=\"translate(18," << (T + H - B) / 2
      << ") rotate(-90)\" text-anchor=\"middle\">trailing success</text>\n";

  constexpr int kGrid = 200;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& run = runs[i];
    const char* color = colors[i % std::size(colors)];
    std::vector<double> xs;
    std::vector<Stat> stats;
    if (axis == CurveAxis::Episode) {
      std::size_t len = 0;
      for (const auto& s : run.seeds) len = std::max(len, s.trailing_success.size());
      const std::size_t stride = std::max<std::size_t>(1, len / kGrid);
      for (std::size_t t = 0; t < len; t += stride) {
        std::vector<double> ys;
        for (const auto& s : run.seeds)
          if (t < s.trailing_success.size()) ys.push_back(s.trailing_success[t]);
        xs.push_back(static_cast<double>(t + 1));
        stats.push_back(summarize(ys));
      }
    } else {
      for (int k = 0; k <= kGrid; ++k) {
        const double x = xmax * k / kGrid;
        std::vector<double> ys;
        for (const auto& s : run.seeds) {
          const auto it = std::upper_bound(s.total_cost.begin(), s.total_cost.end(), x);
          ys.push_back(it == s.total_cost.begin() ? 0.0 : s.trailing_success[it - s.total_cost.begin() - 1]);
        }
        xs.push_back(x);
        stats.push_back(summarize(ys));
      }
    }
    svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
    for (std::size_t k = 0; k < xs.size(); ++k) svg << px(xs[k]) << "," << py(stats[k].max) << " ";
    for (std::size_t k = xs.size(); k-- > 0;) svg << px(xs[k]) << "," << py(stats[k].min) << " ";
    svg << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < xs.size(); ++k) svg << px(xs[k]) << "," << py(stats[k].median) << " ";
    svg << "\"/>\n";
    const double ly = T + 20 + 20 * static_cast<double>(i);
    svg << "<rect x=\"" << W - R + 15 << "\" y=\"" << ly - 9 << "\" width=\"14\" height=\"10\" fill=\"" << color
        << "\"/><text x=\"" << W - R + 35 << "\" y=\"" << ly << "\">" << run.name << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

// --- mazes ----------------------------------------------------------------------

json generate_mazes(int count, std::uint64_t seed0, const fs::path& out, int min_dist) {
  if (count < 1) throw ConfigError("count: must be at least 1");
  fs::create_directories(out);
  const int train = (count + 1) / 2;
  json manifest = {{"version", kCodeVersion}, {"seed0", seed0},          {"count", count},
                   {"min_dist", min_dist},    {"train", json::array()}, {"test", json::array()}};
  for (int i = 0; i < count; ++i) {
    const std::uint64_t seed = mix_seed(seed0, static_cast<std::uint64_t>(i));
    const maze::MazeSpec spec = maze::generate_maze(seed, min_dist);
    std::ostringstream name;
    name << "maze_" << std::setw(5) << std::setfill('0') << i << ".txt";
    write_file(out / name.str(), spec.to_text());
    manifest[i < train ? "train" : "test"].push_back(
        {{"file", name.str()}, {"seed", seed}, {"shortest_path", maze::shortest_path_length(spec)}});
  }
  write_file(out / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace hierg::exp
