#ifndef HIERG_EXPERIMENT_HPP_
#define HIERG_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "hierg/algorithms.hpp"

namespace hierg::exp {

namespace fs = std::filesystem;

inline constexpr int kConfigSchema = 1;

enum class ExpertMode { Synthetic, Human };

struct ExperimentConfig {
  std::string name = "run";
  algo::RunConfig run;  // run.seed is replaced per seed
  std::vector<std::uint64_t> seeds{0};
  ExpertMode expert = ExpertMode::Synthetic;
  std::string output_dir;  // empty: <data dir>/<name>
  std::string hash;
};

// Strict reader: unknown keys and mistyped values throw ConfigError naming
// the offending key path (e.g. "rl.epsilon.steps").
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const fs::path& path);

// Fully resolved configuration, defaults included. The hash covers everything
// except seeds and output_dir, so all seeds of one experiment share it.
nlohmann::json to_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

// $HIERG_DATA_DIR, or ./hierg-data when unset.
fs::path data_dir();
fs::path output_dir(const ExperimentConfig& cfg);

std::string preamble(const std::string& config_hash, std::uint64_t seed);

struct SeedSummary {
  std::uint64_t seed = 0;
  int episodes = 0;
  bool stopped_early = false;
  double final_trailing_success = 0.0;
  double final_trailing_reward = 0.0;
  double peak_trailing_reward = 0.0;
  long lo_steps = 0;
  double inspect_cost = 0.0;
  double label_cost = 0.0;
  double total_cost = 0.0;
};

// Runs every seed (up to `jobs` at a time) and writes, per seed,
// metrics_seed<k>.csv, ledger_seed<k>.csv and checkpoint_seed<k>.json, plus
// config.json and summary.json. Returns the summary document.
nlohmann::json run_experiment(const ExperimentConfig& cfg, const fs::path& out, int jobs = 1);

// --- compare --------------------------------------------------------------------

struct SeedSeries {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<double> trailing_success;
  std::vector<double> trailing_reward;
  std::vector<double> label_cost;  // hi + lo + full labels, cumulative
  std::vector<double> lo_label_cost;
  std::vector<double> total_cost;
};

struct RunSeries {
  fs::path dir;
  std::string name;
  std::string algorithm;
  std::string env;
  std::vector<SeedSeries> seeds;
};

// Reads the metrics CSVs of a run directory. Throws IncompatibleRuns when
// the files carry different config hashes, unless `force`.
RunSeries load_run(const fs::path& dir, bool force = false);

struct Stat {
  double median = 0.0, min = 0.0, max = 0.0;
  int n = 0;
};
Stat summarize(std::vector<double> xs);

// Label cost at the first episode where the trailing success reaches
// `level`, per seed; seeds that never reach it are left out.
std::vector<double> cost_to_reach(const RunSeries& run, double level, bool lo_only);

// Throws IncompatibleRuns unless there are >= 2 runs on one environment.
std::string comparison_table(const std::vector<RunSeries>& runs, const std::vector<double>& levels);

enum class CurveAxis { Episode, ExpertCost };
// Median with a min-max band across seeds, one colored series per run.
std::string learning_curve_svg(const std::vector<RunSeries>& runs, CurveAxis axis);

// --- mazes ----------------------------------------------------------------------

// Writes maze_<i>.txt for i < count and manifest.json; the first ceil(n/2)
// are the training split.
nlohmann::json generate_mazes(int count, std::uint64_t seed0, const fs::path& out,
                              int min_dist = maze::kDefaultMinDist);

}  // namespace hierg::exp

#endif  // HIERG_EXPERIMENT_HPP_
