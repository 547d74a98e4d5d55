#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "vcsched/baselines.hpp"
#include "vcsched/harness.hpp"

using namespace vcsched;
namespace fs = std::filesystem;

namespace {

void write_json(const nlohmann::json& doc, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << doc.dump(2) << "\n";
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write " + out);
  f << doc.dump(2) << "\n";
}

void report(const harness::MetricsTable& table, const harness::ExperimentConfig& cfg, const fs::path& dir) {
  const auto files = harness::emit_outputs(table, cfg.schedulers, dir);
  for (const auto& s : harness::summarize(table, cfg.schedulers)) {
    fmt::print("{:>8} {:>6} {:>8}  mean {:.4f} s  std {:.4f}  feasible {:.2f}\n", s.axis, s.axis_value, s.scheduler,
               s.mean, s.std, s.feasible_rate);
  }
  for (const auto& f : files) fmt::print("wrote {}\n", f.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vehicular-cloud DAG scheduling simulator and benchmark harness"};
  app.require_subcommand(1);

  auto* dag_cmd = app.add_subcommand("dag", "Task graph utilities");
  dag_cmd->require_subcommand(1);
  auto* dag_gen = dag_cmd->add_subcommand("generate", "Write a layered random DAG (or a built-in fixture) as JSON");
  std::size_t subtasks = 20, layers = 5;
  std::uint64_t dag_seed = 1;
  std::string fixture, dag_out;
  dag::GeneratorParams gen;
  dag_gen->add_option("--subtasks", subtasks, "Real subtasks")->capture_default_str();
  dag_gen->add_option("--layers", layers, "Layers")->capture_default_str();
  dag_gen->add_option("--seed", dag_seed, "Generator seed")->capture_default_str();
  dag_gen->add_option("--max-parents", gen.max_parents, "Parents per subtask, at most")->capture_default_str();
  dag_gen->add_option("--fixture", fixture, "Built-in task instead of the generator")
      ->check(CLI::IsMember({"molecular_dynamics"}));
  dag_gen->add_option("-o,--out", dag_out, "Output file (stdout when omitted)");

  auto* fleet_cmd = app.add_subcommand("fleet", "Vehicle fleet utilities");
  fleet_cmd->require_subcommand(1);
  auto* fleet_build = fleet_cmd->add_subcommand("build", "Write a synthetic fleet as JSON");
  std::size_t vehicles = 10;
  std::uint64_t fleet_seed = 1;
  std::string fleet_out;
  fleet_build->add_option("--vehicles", vehicles, "Vehicles including the owner")->capture_default_str();
  fleet_build->add_option("--seed", fleet_seed, "Mobility seed")->capture_default_str();
  fleet_build->add_option("-o,--out", fleet_out, "Output file (stdout when omitted)");
  auto* fleet_ingest = fleet_cmd->add_subcommand("ingest", "Convert a mobility trace CSV to fleet JSON");
  std::string trace;
  mobility::TraceOptions trace_opt;
  bool free_owner = false;
  fleet_ingest->add_option("--trace", trace, "time_s,vehicle_id,x_m,y_m,speed_mps CSV")->required()->check(CLI::ExistingFile);
  fleet_ingest->add_option("--capability-seed", trace_opt.capability_seed, "Seed for drawn capabilities")->capture_default_str();
  fleet_ingest->add_flag("--free-owner", free_owner, "Keep the owner's own dwell window instead of [0, inf)");
  fleet_ingest->add_option("-o,--out", fleet_out, "Output file (stdout when omitted)");

  auto* bench = app.add_subcommand("bench", "Monte-Carlo experiments");
  bench->require_subcommand(1);
  std::string config_path, out_dir, axis_name;
  std::vector<std::size_t> values;
  std::size_t runs = 0;
  auto* bench_run = bench->add_subcommand("run", "Evaluate every configured scheduler");
  bench_run->add_option("--config", config_path, "Experiment TOML")->required()->check(CLI::ExistingFile);
  bench_run->add_option("--out", out_dir, "Output directory (overrides the config)");
  bench_run->add_option("--runs", runs, "Monte-Carlo runs (overrides the config)");
  auto* bench_sweep = bench->add_subcommand("sweep", "Repeat the experiment along one axis");
  bench_sweep->add_option("--config", config_path, "Experiment TOML")->required()->check(CLI::ExistingFile);
  bench_sweep->add_option("--axis", axis_name, "vehicles | subtasks | layers")
      ->required()
      ->check(CLI::IsMember({"vehicles", "subtasks", "layers"}));
  bench_sweep->add_option("--values", values, "Comma-separated axis values")->required()->delimiter(',');
  bench_sweep->add_option("--out", out_dir, "Output directory (overrides the config)");
  bench_sweep->add_option("--runs", runs, "Monte-Carlo runs (overrides the config)");

  auto* train_cmd = app.add_subcommand("train", "Train a learned scheduler on the held-out topology");
  std::string ckpt_out, learner = "gadrl";
  std::size_t episodes = 0;
  train_cmd->add_option("--config", config_path, "Experiment TOML")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", ckpt_out, "Checkpoint path")->required();
  train_cmd->add_option("--scheduler", learner, "gadrl | drlosm")
      ->capture_default_str()
      ->check(CLI::IsMember({"gadrl", "drlosm"}));
  train_cmd->add_option("--episodes", episodes, "Training episodes (overrides the config)");

  auto* oracle_cmd = app.add_subcommand("oracle", "Exhaustive optimum for a small instance");
  std::string dag_path, fleet_path, result_out;
  oracle_cmd->add_option("--dag", dag_path, "Task JSON")->required()->check(CLI::ExistingFile);
  oracle_cmd->add_option("--fleet", fleet_path, "Fleet JSON")->required()->check(CLI::ExistingFile);
  oracle_cmd->add_option("-o,--out", result_out, "Output file (stdout when omitted)");

  auto* sched_cmd = app.add_subcommand("schedule", "Run one non-learned scheduler on a task and fleet");
  std::string sched_name = "heft";
  std::uint64_t sched_seed = 1;
  sched_cmd->add_option("--scheduler", sched_name, "lps | heft | mga | oracle")
      ->capture_default_str()
      ->check(CLI::IsMember({"lps", "heft", "mga", "oracle"}));
  sched_cmd->add_option("--dag", dag_path, "Task JSON")->required()->check(CLI::ExistingFile);
  sched_cmd->add_option("--fleet", fleet_path, "Fleet JSON")->required()->check(CLI::ExistingFile);
  sched_cmd->add_option("--seed", sched_seed, "Scheduler seed")->capture_default_str();
  sched_cmd->add_option("-o,--out", result_out, "Output file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (dag_gen->parsed()) {
      const auto task = fixture.empty() ? dag::generate_random(subtasks, layers, dag_seed, gen) : dag::molecular_dynamics_fixture();
      write_json(dag::to_json(task), dag_out);
    } else if (fleet_build->parsed()) {
      write_json(mobility::to_json(mobility::build_fleet(vehicles, fleet_seed)), fleet_out);
    } else if (fleet_ingest->parsed()) {
      trace_opt.pin_owner = !free_owner;
      write_json(mobility::to_json(mobility::ingest_trace(trace, {}, trace_opt)), fleet_out);
    } else if (bench_run->parsed() || bench_sweep->parsed()) {
      auto cfg = harness::load_config(config_path);
      if (runs) cfg.monte_carlo_runs = runs;
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      const auto table = bench_run->parsed()
                             ? harness::run_experiment(cfg)
                             : harness::sweep(cfg, harness::parse_axis(axis_name), values);
      report(table, cfg, cfg.output_dir);
    } else if (train_cmd->parsed()) {
      auto cfg = harness::load_config(config_path);
      if (episodes) cfg.train.config.episodes = episodes;
      const auto source = harness::training_source(cfg);
      auto policy = cfg.train.config.policy;
      auto result = learner == "gadrl" ? ddqn::train(source, cfg.train.config, cfg.train.seed)
                                       : baselines::drlosm_train(source, cfg.train.config, cfg.train.seed);
      if (learner == "drlosm") {
        policy.features = ddqn::FeatureSource::raw;
        policy.sync();
      }
      const fs::path out(ckpt_out);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      ddqn::save_policy(out, result.params, policy);
      auto log_path = out;
      log_path.replace_extension(".log.csv");
      ddqn::write_log_csv(result.log, log_path);
      fmt::print("wrote {} and {}\n", out.string(), log_path.string());
    } else if (oracle_cmd->parsed() || sched_cmd->parsed()) {
      const auto instance = sim::make_instance(dag::load_dag(dag_path), mobility::load_fleet(fleet_path));
      const auto name = oracle_cmd->parsed() ? std::string("oracle") : sched_name;
      baselines::SchedulerSettings settings;
      const auto result = baselines::make_scheduler(name, settings)(instance, sched_seed);
      write_json(sim::to_json(result), result_out);
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "vcsched: error: {}\n", e.what());
    return 1;
  }
  return 0;
}
