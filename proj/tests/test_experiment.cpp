#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"

#include "hierg/experiment.hpp"

using namespace hierg;
using namespace hierg::exp;
using nlohmann::json;

namespace {

json minimal(const std::string& algorithm = "hg-dagger", const std::string& env = "maze") {
  return {{"schema", 1},
          {"name", "t_" + algorithm + "_" + env},
          {"algorithm", algorithm},
          {"env", env},
          {"seeds", {1}},
          {"episodes", 20},
          {"warm_start", env == "maze" ? 3 : 0},
          {"maze", {{"train_mazes", 12}, {"test_mazes", 4}}}};
}

std::string parse_error(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("hierg_exp_" + tag + "_" + std::to_string(std::random_device{}()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Reference FNV-1a, 64-bit.
std::uint64_t fnv(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

int cli(const std::string& args) {
  const int status = std::system((std::string(HIERG_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config errors name the offending key") {
  json doc = minimal();
  doc["rl"] = {{"epsilon", {{"stepz", 10}}}};
  CHECK(parse_error(doc).find("rl.epsilon.stepz") != std::string::npos);

  doc = minimal();
  doc["maze"]["horizons"] = {{"lo", "eight"}};
  CHECK(parse_error(doc).find("maze.horizons.lo") != std::string::npos);

  doc = minimal();
  doc["episodez"] = 3;
  CHECK(parse_error(doc).find("episodez") != std::string::npos);

  doc = minimal();
  doc.erase("schema");
  CHECK(parse_error(doc).find("schema") != std::string::npos);

  doc = minimal();
  doc["algorithm"] = "ppo";
  CHECK(parse_error(doc).find("algorithm") != std::string::npos);

  doc = minimal("flat-dagger");
  doc["expert"] = "human";
  CHECK(parse_error(doc).find("expert") != std::string::npos);

  doc = minimal();
  doc["seeds"] = {1, -2};
  CHECK(parse_error(doc).find("seeds") != std::string::npos);

  CHECK(parse_error(minimal()).empty());
}

TEST_CASE("resolved configs round trip") {
  json doc = minimal("hg-dagger-q");
  doc["rl"] = {{"alpha", 0.25}, {"replay", {{"prioritized", false}}}};
  doc["costs"] = {{"hi_label", 2.5}, {"lo_label", "steps"}};
  const ExperimentConfig a = parse_config(doc);
  const ExperimentConfig b = parse_config(to_json(a));
  CHECK(to_json(a) == to_json(b));
  CHECK(a.hash == b.hash);
  CHECK(b.run.rl.alpha == 0.25);
  CHECK_FALSE(b.run.rl.replay.prioritized);
}

TEST_CASE("config hash is FNV-1a over the resolved config without seeds and output") {
  CHECK(fnv("a") == 0xaf63dc4c8601ec8cull);
  const ExperimentConfig cfg = parse_config(minimal());
  json j = to_json(cfg);
  j.erase("seeds");
  j.erase("output_dir");
  char expect[17];
  std::snprintf(expect, sizeof expect, "%016llx", static_cast<unsigned long long>(fnv(j.dump())));
  CHECK(cfg.hash == expect);
  CHECK(config_hash(cfg) == cfg.hash);

  json other = minimal();
  other["seeds"] = {4, 5, 6};
  other["output_dir"] = "/somewhere/else";
  CHECK(parse_config(other).hash == cfg.hash);
  other["episodes"] = 21;
  CHECK(parse_config(other).hash != cfg.hash);
}

TEST_CASE("data directory follows the environment") {
  const char* old = std::getenv("HIERG_DATA_DIR");
  const std::string saved = old ? old : "";
  setenv("HIERG_DATA_DIR", "/tmp/hierg_dd", 1);
  CHECK(data_dir() == fs::path("/tmp/hierg_dd"));
  CHECK(output_dir(parse_config(minimal())) == fs::path("/tmp/hierg_dd") / "t_hg-dagger_maze");
  unsetenv("HIERG_DATA_DIR");
  CHECK(data_dir() == fs::path("hierg-data"));
  if (old) setenv("HIERG_DATA_DIR", saved.c_str(), 1);
}

TEST_CASE("genmazes splits the first half up for training and is deterministic") {
  const fs::path a = scratch("ma"), b = scratch("mb");
  for (const auto& [count, train] : std::vector<std::pair<int, int>>{{1, 1}, {6, 3}, {7, 4}}) {
    const json m = generate_mazes(count, 9, a / std::to_string(count));
    CHECK(static_cast<int>(m.at("train").size()) == train);
    CHECK(static_cast<int>(m.at("test").size()) == count - train);
  }
  const json m1 = generate_mazes(5, 77, a / "five");
  const json m2 = generate_mazes(5, 77, b / "five");
  CHECK(m1 == m2);
  for (int i = 0; i < 5; ++i) {
    const std::string f = "maze_0000" + std::to_string(i) + ".txt";
    CHECK(slurp(a / "five" / f) == slurp(b / "five" / f));
    CHECK(maze::MazeSpec::from_text(slurp(a / "five" / f)) == maze::generate_maze(mix_seed(77, i)));
  }
  CHECK_THROWS_AS(generate_mazes(0, 1, a / "none"), ConfigError);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("genmazes of 2000 splits 1000 and 1000") {
  const fs::path a = scratch("m2000");
  const json m = generate_mazes(2000, 0, a);
  CHECK(m.at("train").size() == 1000);
  CHECK(m.at("test").size() == 1000);
  for (const auto& e : m.at("train")) CHECK(e.at("shortest_path").get<int>() >= 40);
  fs::remove_all(a);
}

TEST_CASE("run writes per-seed outputs that embed the hash and seed") {
  const fs::path out = scratch("run");
  json doc = minimal();
  doc["seeds"] = {3, 1};
  const ExperimentConfig cfg = parse_config(doc);
  const json summary = run_experiment(cfg, out, 2);
  CHECK(summary.at("config_hash") == cfg.hash);
  REQUIRE(summary.at("seeds").size() == 2);
  CHECK(summary.at("seeds")[0].at("seed") == 3);
  for (int seed : {1, 3}) {
    const std::string tag = "seed" + std::to_string(seed);
    for (const std::string& f : {"metrics_" + tag + ".csv", "ledger_" + tag + ".csv"}) {
      const std::string text = slurp(out / f);
      CHECK(text.rfind("# hierg " + std::string(kCodeVersion) + " config=" + cfg.hash + " seed=" +
                           std::to_string(seed),
                       0) == 0);
    }
    const json ck = json::parse(slurp(out / ("checkpoint_" + tag + ".json")));
    CHECK(ck.at("config_hash") == cfg.hash);
  }
  CHECK(parse_config(json::parse(slurp(out / "config.json"))).hash == cfg.hash);
  fs::remove_all(out);
}

TEST_CASE("compare aggregates runs and refuses incompatible ones") {
  const fs::path root = scratch("cmp");
  run_experiment(parse_config(minimal("hg-dagger")), root / "hg");
  run_experiment(parse_config(minimal("flat-dagger")), root / "flat");
  run_experiment(parse_config(minimal("hg-dagger-q", "chain")), root / "chain");

  const RunSeries hg = load_run(root / "hg"), flat = load_run(root / "flat");
  CHECK(hg.algorithm == "hg-dagger");
  CHECK(hg.env == "maze");
  REQUIRE(hg.seeds.size() == 1);
  CHECK(hg.seeds[0].trailing_success.size() == 20);

  // One seed: median, min and max coincide.
  const std::vector<double> reach = cost_to_reach(hg, 0.0, true);
  REQUIRE(reach.size() == 1);
  const Stat s = summarize(reach);
  CHECK(s.median == s.min);
  CHECK(s.max == s.min);
  const std::string table = comparison_table({hg, flat}, {0.0});
  CHECK(table.find("hg-dagger") != std::string::npos);
  CHECK(table.find("flat-dagger") != std::string::npos);

  CHECK_THROWS_AS(comparison_table({hg, load_run(root / "chain")}, {0.5}), IncompatibleRuns);
  CHECK_THROWS_AS(comparison_table({hg}, {0.5}), IncompatibleRuns);

  // A seed from another config makes the directory mixed.
  json other = minimal("hg-dagger");
  other["episodes"] = 15;
  other["seeds"] = {2};
  run_experiment(parse_config(other), root / "other");
  fs::copy_file(root / "other" / "metrics_seed2.csv", root / "hg" / "metrics_seed2.csv");
  CHECK_THROWS_AS(load_run(root / "hg"), IncompatibleRuns);
  CHECK(load_run(root / "hg", true).seeds.size() == 2);

  for (auto axis : {CurveAxis::Episode, CurveAxis::ExpertCost}) {
    const std::string svg = learning_curve_svg({hg, flat}, axis);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
  }
  fs::remove_all(root);
}

TEST_CASE("median of an even count averages the middle pair") {
  const Stat s = summarize({4.0, 1.0, 3.0, 2.0});
  CHECK(s.median == 2.5);
  CHECK(s.min == 1.0);
  CHECK(s.max == 4.0);
  CHECK(s.n == 4);
}

TEST_CASE("command line exit codes") {
  const fs::path root = scratch("cli");
  const std::string env = "HIERG_DATA_DIR=" + root.string() + " ";
  auto write = [&](const std::string& name, const json& doc) {
    std::ofstream(root / name) << doc.dump();
    return (root / name).string();
  };
  const std::string good = write("good.json", minimal());
  json bad_doc = minimal();
  bad_doc["rl"] = {{"alpha", "fast"}};
  const std::string bad = write("bad.json", bad_doc);
  std::ofstream(root / "blocker") << "a file, not a directory";
  json blocked = minimal();
  blocked["output_dir"] = (root / "blocker" / "out").string();
  const std::string fails = write("fails.json", blocked);

  CHECK(cli("run --config " + bad) == 2);
  CHECK(cli("run --config " + (root / "missing.json").string()) == 2);
  CHECK(cli("run --config " + fails) == 3);
  CHECK(std::system((env + HIERG_CLI + " run --config " + good + " >/dev/null").c_str()) == 0);
  CHECK(fs::exists(root / "t_hg-dagger_maze" / "metrics_seed1.csv"));
  const std::string first = slurp(root / "t_hg-dagger_maze" / "metrics_seed1.csv");
  CHECK(cli("run --config " + good + " --out " + (root / "again").string()) == 0);
  CHECK(slurp(root / "again" / "metrics_seed1.csv") == first);

  CHECK(cli("genmazes 0 1 " + (root / "mz").string()) == 2);
  CHECK(cli("genmazes 3 1 " + (root / "mz").string()) == 0);
  CHECK(fs::exists(root / "mz" / "manifest.json"));

  json chain = minimal("hg-dagger-q", "chain");
  CHECK(cli("run --config " + write("chain.json", chain) + " --out " + (root / "ch").string()) == 0);
  CHECK(cli("compare " + (root / "again").string() + " " + (root / "ch").string() + " --out " +
            (root / "cmp").string()) == 2);
  CHECK(cli("compare " + (root / "again").string() + " " + (root / "t_hg-dagger_maze").string() + " --out " +
            (root / "cmp").string()) == 0);
  CHECK(fs::exists(root / "cmp" / "success_vs_expert_cost.svg"));
  CHECK(cli("verify-bounds --instances 3 --episodes 40") == 0);
  CHECK(cli("frobnicate") == 2);
  fs::remove_all(root);
}
