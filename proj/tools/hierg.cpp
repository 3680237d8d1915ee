// hierg: run experiments, compare runs, generate mazes, check the bounds and
// serve human-expert sessions.

#include <csignal>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "hierg/experiment.hpp"
#include "hierg/service.hpp"
#include "hierg/theory.hpp"

namespace fs = std::filesystem;
using namespace hierg;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kFailed = 3;

int cmd_run(const std::string& config, const std::string& out_opt, int jobs) {
  exp::ExperimentConfig cfg;
  try {
    cfg = exp::load_config(config);
  } catch (const std::exception& e) {
    std::cerr << "invalid config " << config << ": " << e.what() << "\n";
    return kInvalid;
  }
  const fs::path out = out_opt.empty() ? exp::output_dir(cfg) : fs::path(out_opt);
  try {
    const json summary = exp::run_experiment(cfg, out, jobs);
    const auto& f = summary.at("final_trailing_success");
    std::cout << cfg.name << " (" << cfg.hash << ") -> " << out.string() << "\n"
              << "final trailing success: median " << f.at("median").get<double>() << ", range ["
              << f.at("min").get<double>() << ", " << f.at("max").get<double>() << "] over "
              << cfg.seeds.size() << " seeds\n";
  } catch (const ConfigError& e) {
    std::cerr << "invalid config " << config << ": " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kFailed;
  }
  return kOk;
}

int cmd_compare(const std::vector<std::string>& dirs, bool force, const std::string& out_opt,
                const std::vector<double>& levels) {
  std::vector<exp::RunSeries> runs;
  try {
    for (const auto& d : dirs) runs.push_back(exp::load_run(d, force));
    const std::string table = exp::comparison_table(runs, levels);
    std::cout << table;
    const fs::path out = out_opt.empty() ? exp::data_dir() / "compare" : fs::path(out_opt);
    fs::create_directories(out);
    std::ofstream(out / "table.txt", std::ios::binary) << table;
    std::ofstream(out / "success_vs_episode.svg", std::ios::binary)
        << exp::learning_curve_svg(runs, exp::CurveAxis::Episode);
    std::ofstream(out / "success_vs_expert_cost.svg", std::ios::binary)
        << exp::learning_curve_svg(runs, exp::CurveAxis::ExpertCost);
    std::cout << "curves written to " << out.string() << "\n";
  } catch (const IncompatibleRuns& e) {
    std::cerr << "incompatible runs: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "compare failed: " << e.what() << "\n";
    return kFailed;
  }
  return kOk;
}

int cmd_genmazes(int count, std::uint64_t seed0, const std::string& out_opt, int min_dist) {
  if (count < 1) {
    std::cerr << "count must be at least 1\n";
    return kInvalid;
  }
  const fs::path out = out_opt.empty() ? exp::data_dir() / "mazes" : fs::path(out_opt);
  try {
    const json m = exp::generate_mazes(count, seed0, out, min_dist);
    std::cout << count << " mazes (" << m.at("train").size() << " train, " << m.at("test").size()
              << " test) in " << out.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "genmazes failed: " << e.what() << "\n";
    return kFailed;
  }
  return kOk;
}

int cmd_verify(int instances, int episodes, std::uint64_t seed0, bool verbose) {
  int bad = 0;
  for (int i = 0; i < instances; ++i) {
    const theory::SyntheticInstance inst = theory::make_instance(seed0 + i);
    const theory::VerifyReport r = theory::verify_bounds(inst, episodes);
    if (!r.ok()) ++bad;
    if (verbose || !r.ok()) std::cout << r.to_text() << "\n";
  }
  std::cout << instances << " instances, " << episodes << " episodes each: " << bad << " with violations\n";
  return bad == 0 ? kOk : kFailed;
}

service::Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

int cmd_serve(const std::string& host, int port, const std::string& store_opt) {
  const fs::path store = store_opt.empty() ? exp::data_dir() / "sessions" : fs::path(store_opt);
  try {
    service::Service svc({store});
    const int resumed = svc.resume_all();
    std::cout << "serving on " << host << ":" << port << ", store " << store.string() << ", " << resumed
              << " sessions resumed" << std::endl;
    g_service = &svc;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    svc.listen(host, port);
    g_service = nullptr;
  } catch (const std::exception& e) {
    std::cerr << "serve failed: " << e.what() << "\n";
    return kFailed;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical imitation and reinforcement learning experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run every seed of an experiment config");
  std::string config, run_out;
  int jobs = 1;
  run->add_option("--config", config, "Experiment config (JSON)")->required();
  run->add_option("--out", run_out, "Output directory (default: config output_dir or $HIERG_DATA_DIR/<name>)");
  run->add_option("--jobs", jobs, "Seeds run in parallel")->check(CLI::PositiveNumber);

  auto* compare = app.add_subcommand("compare", "Tabulate and plot completed runs");
  std::vector<std::string> dirs;
  bool force = false;
  std::string cmp_out;
  std::vector<double> levels{0.5, 0.8, 0.9};
  compare->add_option("dirs", dirs, "Run directories")->required()->expected(2, -1);
  compare->add_flag("--force", force, "Accept seeds with differing config hashes");
  compare->add_option("--out", cmp_out, "Where the table and SVG curves go");
  compare->add_option("--levels", levels, "Success levels for the cost table")->delimiter(',');

  auto* gen = app.add_subcommand("genmazes", "Write maze files and a train/test manifest");
  int count = 2000;
  std::uint64_t seed0 = 0;
  std::string gen_out;
  int min_dist = maze::kDefaultMinDist;
  gen->add_option("count", count, "Number of mazes")->required();
  gen->add_option("seed0", seed0, "Base seed")->required();
  gen->add_option("out", gen_out, "Output directory (default: $HIERG_DATA_DIR/mazes)");
  gen->add_option("--min-dist", min_dist, "Minimum shortest-path length");

  auto* verify = app.add_subcommand("verify-bounds", "Check realized costs against the theoretical bounds");
  int instances = 50, episodes = 150;
  std::uint64_t vseed = 1;
  bool verbose = false;
  verify->add_option("--instances", instances)->check(CLI::PositiveNumber);
  verify->add_option("--episodes", episodes)->check(CLI::PositiveNumber);
  verify->add_option("--seed0", vseed);
  verify->add_flag("-v,--verbose", verbose, "Print every report");

  auto* serve = app.add_subcommand("serve", "Serve human-expert sessions over HTTP");
  std::string host = "127.0.0.1", store;
  int port = 8080;
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--store", store, "Session journals (default: $HIERG_DATA_DIR/sessions)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInvalid;
  }

  if (*run) return cmd_run(config, run_out, jobs);
  if (*compare) return cmd_compare(dirs, force, cmp_out, levels);
  if (*gen) return cmd_genmazes(count, seed0, gen_out, min_dist);
  if (*verify) return cmd_verify(instances, episodes, vseed, verbose);
  if (*serve) return cmd_serve(host, port, store);
  return kInvalid;
}
