#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "test_util.hpp"
#include "vcsched/harness.hpp"

using namespace vcsched;
using namespace vcsched::harness;

namespace {

const std::filesystem::path kDefaults = std::filesystem::path(VCSCHED_SOURCE_DIR) / "configs" / "defaults.toml";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

ExperimentConfig quick(std::vector<std::string> schedulers = {"lps", "heft", "mga"}) {
  ExperimentConfig c;
  c.schedulers = std::move(schedulers);
  c.monte_carlo_runs = 3;
  c.threads = 1;
  c.mga.generations = 10;
  c.mga.population = 10;
  return c;
}

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) { setenv(name, value, 1); }
  ~ScopedEnv() { unsetenv(name_); }

 private:
  const char* name_;
};

}  // namespace

TEST(Config, DefaultsFileMatchesBuiltInDefaults) {
  const auto c = load_config(kDefaults);
  const ExperimentConfig d;
  EXPECT_EQ(c.schedulers, d.schedulers);
  EXPECT_EQ(c.monte_carlo_runs, 100u);
  EXPECT_EQ(c.dag.subtasks, d.dag.subtasks);
  EXPECT_EQ(c.dag.layers, d.dag.layers);
  EXPECT_EQ(c.fleet.vehicles, d.fleet.vehicles);
  EXPECT_DOUBLE_EQ(c.fleet.mobility.mu_g, d.fleet.mobility.mu_g);
  EXPECT_DOUBLE_EQ(c.fleet.mobility.sigma_g, d.fleet.mobility.sigma_g);
  EXPECT_DOUBLE_EQ(c.channel.fc_ghz, d.channel.fc_ghz);
  EXPECT_DOUBLE_EQ(c.train.config.lr, 1e-4);
  EXPECT_DOUBLE_EQ(c.train.config.gamma, 0.9);
  EXPECT_EQ(c.train.config.k_copy, 5u);
  EXPECT_EQ(c.train.config.episodes, d.train.config.episodes);
  EXPECT_EQ(c.train.config.policy.gat.dims, d.train.config.policy.gat.dims);
  EXPECT_EQ(c.train.config.policy.hidden, d.train.config.policy.hidden);
  EXPECT_EQ(c.mga.population, d.mga.population);
  EXPECT_TRUE(c.output_dir.is_absolute());
  EXPECT_EQ(c.output_dir.filename(), "results");
}

TEST(Config, PartialDocumentKeepsDefaults) {
  const auto c = parse_config("[dag]\nsubtasks = 30\n[train]\nhidden = [64]\n");
  EXPECT_EQ(c.dag.subtasks, 30u);
  EXPECT_EQ(c.dag.layers, 5u);
  EXPECT_EQ(c.train.config.policy.hidden, std::vector<std::size_t>{64});
  EXPECT_EQ(c.monte_carlo_runs, 100u);
}

TEST(Config, UnknownKeysSectionsAndBadValuesAreErrors) {
  EXPECT_THROW(parse_config("[dag]\nbogus = 1\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("[nope]\nx = 1\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("[dag]\nsubtasks = \"many\"\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("[experiment]\nschedulers = [\"random\"]\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("[dag]\nsubtasks = 3\nlayers = 4\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("[channel]\nmode = \"noisy\"\n"), std::invalid_argument);
  EXPECT_ANY_THROW(parse_config("[dag\n"));
}

TEST(Config, SeedEnvironmentOverride) {
  {
    ScopedEnv env("VCSCHED_SEED", "77");
    EXPECT_EQ(load_config(kDefaults).base_seed, 77u);
  }
  {
    ScopedEnv env("VCSCHED_SEED", "7x");
    EXPECT_THROW(load_config(kDefaults), std::invalid_argument);
  }
  EXPECT_EQ(load_config(kDefaults).base_seed, 1u);
}

TEST(Axis, RoundTrip) {
  for (auto a : {Axis::vehicles, Axis::subtasks, Axis::layers}) EXPECT_EQ(parse_axis(to_string(a)), a);
  EXPECT_THROW(parse_axis("speed"), std::invalid_argument);
}

TEST(Experiment, LpsSingleRunIsWorkloadOverOwnerCapability) {
  auto cfg = quick({"lps"});
  cfg.monte_carlo_runs = 1;
  const auto table = run_experiment(cfg);
  ASSERT_EQ(table.size(), 1u);
  const auto inst = make_run_instance(cfg, 0);
  double sum = 0.0;
  for (dag::SubtaskId i = 1; i < inst->task.size(); ++i) sum += inst->task.workload(i);
  EXPECT_NEAR(table[0].makespan, sum / inst->fleet.vehicle(mobility::kOwner).capability_f, 1e-9);
  EXPECT_EQ(table[0].seed, cfg.base_seed);
  EXPECT_TRUE(table[0].feasible);
}

TEST(Experiment, SingleVehicleMakesEverySchedulerEqual) {
  auto cfg = quick();
  const auto table = sweep(cfg, Axis::vehicles, {1});
  ASSERT_EQ(table.size(), 9u);
  std::map<std::size_t, double> lps;
  for (const auto& r : table) {
    if (r.scheduler == "lps") lps[r.run] = r.makespan;
  }
  for (const auto& r : table) {
    EXPECT_EQ(r.vehicles, 1u);
    EXPECT_DOUBLE_EQ(r.makespan, lps.at(r.run)) << r.scheduler;
  }
}

TEST(Experiment, SubtaskSweepShape) {
  auto cfg = quick({"lps", "heft"});
  cfg.monte_carlo_runs = 2;
  const auto table = sweep(cfg, Axis::subtasks, {10, 20, 30});
  ASSERT_EQ(table.size(), 12u);
  for (const auto& r : table) {
    EXPECT_EQ(r.axis, "subtasks");
    EXPECT_EQ(r.subtasks, static_cast<std::size_t>(r.axis_value));
    EXPECT_TRUE(r.feasible);
  }
  EXPECT_EQ(table.front().axis_value, 10.0);
  EXPECT_EQ(table.back().axis_value, 30.0);
}

TEST(Experiment, MolecularDynamicsFixtureOnTwentyVehicles) {
  auto cfg = quick({"lps", "heft"});
  cfg.dag.fixture = "molecular_dynamics";
  cfg.fleet.vehicles = 20;
  cfg.monte_carlo_runs = 2;
  const auto table = run_experiment(cfg);
  ASSERT_EQ(table.size(), 4u);
  for (const auto& r : table) {
    EXPECT_EQ(r.subtasks, 41u);
    EXPECT_EQ(r.vehicles, 20u);
    EXPECT_TRUE(r.feasible);
  }
}

TEST(Experiment, ThreadCountDoesNotChangeResults) {
  auto cfg = quick();
  const auto a = run_experiment(cfg);
  cfg.threads = 3;
  const auto b = run_experiment(cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].scheduler, b[k].scheduler);
    EXPECT_EQ(a[k].run, b[k].run);
    EXPECT_EQ(a[k].makespan, b[k].makespan);
  }
}

TEST(Outputs, FilesRowsAndSummaryMeans) {
  auto cfg = quick();
  const auto table = sweep(cfg, Axis::layers, {2, 4});
  const auto dir = vcsched::testing::scratch_dir("outputs");
  const auto paths = emit_outputs(table, cfg.schedulers, dir);
  for (const auto* name : {"metrics.csv", "summary.csv", "timing.csv", "plot_layers.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
  }
  EXPECT_GE(paths.size(), 4u);
  const auto metrics = read_csv(dir / "metrics.csv");
  ASSERT_EQ(metrics.size(), table.size() + 1);
  EXPECT_EQ(metrics[0].front(), "axis");

  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (std::size_t k = 1; k < metrics.size(); ++k) groups[{metrics[k][1], metrics[k][2]}].push_back(std::stod(metrics[k][8]));
  const auto summary = read_csv(dir / "summary.csv");
  ASSERT_EQ(summary.size(), groups.size() + 1);
  for (std::size_t k = 1; k < summary.size(); ++k) {
    const auto& v = groups.at({summary[k][1], summary[k][2]});
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    EXPECT_NEAR(std::stod(summary[k][4]), mean, 1e-9 * mean);
    EXPECT_NEAR(std::stod(summary[k][5]), std::sqrt(ss / static_cast<double>(v.size() - 1)), 1e-9 * mean);
  }
  EXPECT_EQ(read_csv(dir / "plot_layers.csv").size(), 3u);
}

TEST(Outputs, RerunsAreByteIdentical) {
  auto cfg = quick();
  const auto d1 = vcsched::testing::scratch_dir("rerun-1"), d2 = vcsched::testing::scratch_dir("rerun-2");
  emit_outputs(run_experiment(cfg), cfg.schedulers, d1);
  emit_outputs(run_experiment(cfg), cfg.schedulers, d2);
  EXPECT_EQ(slurp(d1 / "metrics.csv"), slurp(d2 / "metrics.csv"));
  EXPECT_EQ(slurp(d1 / "summary.csv"), slurp(d2 / "summary.csv"));
  EXPECT_FALSE(std::filesystem::exists(d1 / "plot_none.csv"));
  EXPECT_THROW(emit_outputs({}, cfg.schedulers, d1), std::invalid_argument);
}

TEST(Hash, KnownFnv1aValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
}
