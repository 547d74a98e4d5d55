#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "vcsched/baselines.hpp"
#include "vcsched/channel.hpp"
#include "vcsched/dag.hpp"
#include "vcsched/ddqn.hpp"
#include "vcsched/mobility.hpp"

namespace vcsched::harness {

struct DagSpec {
  std::size_t subtasks = 20;
  std::size_t layers = 5;
  /// JSON task file; when set every run uses this task.
  std::filesystem::path file;
  /// Built-in task ("molecular_dynamics"); when set every run uses it.
  std::string fixture;
  dag::GeneratorParams generator;
};

struct FleetSpec {
  std::size_t vehicles = 10;
  /// JSON fleet file; when set every run uses this fleet.
  std::filesystem::path file;
  /// Mobility trace CSV; when set every run uses the ingested fleet.
  std::filesystem::path trace;
  mobility::MobilityParams mobility;
  mobility::CapabilityRange capability;
};

struct TrainSpec {
  ddqn::TrainConfig config;
  std::uint64_t seed = 1;
  /// Cache directory for trained policies, keyed by a hash of the config.
  std::filesystem::path checkpoint_dir = "checkpoints";
  /// Explicit checkpoints; when set they are loaded instead of training.
  std::filesystem::path gadrl_checkpoint;
  std::filesystem::path drlosm_checkpoint;
};

struct ExperimentConfig {
  std::vector<std::string> schedulers{"lps", "heft", "mga", "drlosm", "gadrl"};
  std::size_t monte_carlo_runs = 100;
  std::uint64_t base_seed = 1;
  std::filesystem::path output_dir = "results";
  /// Worker threads for Monte-Carlo runs; 0 picks the hardware concurrency.
  std::size_t threads = 0;
  DagSpec dag;
  FleetSpec fleet;
  channel::ChannelParams channel;
  TrainSpec train;
  baselines::GaConfig mga;

  /// Throws std::invalid_argument on an unregistered scheduler, zero runs or
  /// inconsistent sub-configs.
  void check() const;
};

/// Parses a TOML document. Keys missing from the document keep their
/// defaults; unknown sections or keys are errors. Relative file paths are
/// resolved against `base_dir`.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
/// Reads a config file and applies the VCSCHED_SEED override.
ExperimentConfig load_config(const std::filesystem::path& path);
/// Replaces base_seed with $VCSCHED_SEED when it is set.
void apply_env_overrides(ExperimentConfig& cfg);

enum class Axis { none, vehicles, subtasks, layers };
std::string to_string(Axis axis);
Axis parse_axis(std::string_view name);

struct MetricsRow {
  std::string axis = "none";
  double axis_value = 0.0;
  std::string scheduler;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  std::size_t subtasks = 0;
  std::size_t layers = 0;
  std::size_t vehicles = 0;
  double makespan = 0.0;
  double wall_s = 0.0;
  bool feasible = false;
};

struct SummaryRow {
  std::string axis;
  double axis_value = 0.0;
  std::string scheduler;
  std::size_t runs = 0;
  double mean = 0.0;
  /// Sample standard deviation (n - 1); 0 for a single run.
  double std = 0.0;
  double feasible_rate = 0.0;
  double mean_wall_s = 0.0;
};

/// Sorted by (axis value, scheduler position in the config, run).
using MetricsTable = std::vector<MetricsRow>;

std::vector<SummaryRow> summarize(const MetricsTable& table, const std::vector<std::string>& scheduler_order);

/// The instance for Monte-Carlo run `run`: seed = base_seed + run.
std::shared_ptr<const sim::ProblemInstance> make_run_instance(const ExperimentConfig& cfg, std::size_t run);

/// Training episodes draw a fixed held-out topology (seed base_seed + 1e6)
/// and a fresh fleet each episode. Along the vehicles axis the fleet size is
/// drawn uniformly from `vehicle_counts`.
ddqn::InstanceSource training_source(const ExperimentConfig& cfg, std::vector<std::size_t> vehicle_counts = {});

/// Loads, or trains and caches, the learned policies named in the config.
baselines::SchedulerSettings prepare_schedulers(const ExperimentConfig& cfg,
                                                std::vector<std::size_t> vehicle_counts = {});

/// Evaluates every scheduler on monte_carlo_runs fresh instances.
MetricsTable run_experiment(const ExperimentConfig& cfg);
MetricsTable run_experiment(const ExperimentConfig& cfg, const baselines::SchedulerSettings& settings,
                            Axis axis = Axis::none, double axis_value = 0.0);

/// run_experiment for each value of `axis`, with learned policies trained
/// once for the whole sweep.
MetricsTable sweep(const ExperimentConfig& cfg, Axis axis, const std::vector<std::size_t>& values);

/// Writes metrics.csv, summary.csv, timing.csv and one plot_<axis>.csv per
/// axis present in the table. Wall-clock values only go to timing.csv.
/// Throws std::invalid_argument on an empty table and std::runtime_error
/// when the directory cannot be written.
std::vector<std::filesystem::path> emit_outputs(const MetricsTable& table, const std::vector<std::string>& scheduler_order,
                                                const std::filesystem::path& dir);

/// FNV-1a 64 over the bytes of `text`.
std::uint64_t fnv1a(std::string_view text);

}  // namespace vcsched::harness
