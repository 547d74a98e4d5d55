#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vcsched/ddqn.hpp"
#include "vcsched/schedule.hpp"

namespace vcsched::baselines {

using Instance = std::shared_ptr<const sim::ProblemInstance>;

/// Every subtask on the owner, serially in priority order.
sim::ScheduleResult lps(Instance instance);

/// Minimum-EFT list scheduling over the priority list. The argmin ignores the
/// dwell window; a choice that violates it falls back to the owner. Ties go
/// to the lowest vehicle index.
sim::ScheduleResult heft(Instance instance);

struct GaConfig {
  std::size_t population = 50;
  std::size_t generations = 200;
  double crossover = 0.8;
  double mutation = 0.05;
  std::size_t tournament = 3;
  std::uint64_t seed = 1;
  /// Start from a population of all-owner chromosomes instead of random ones.
  bool all_owner_init = false;

  void check() const;
};

/// Genetic search over subtask -> vehicle chromosomes. Fitness is the makespan
/// of the decoded schedule with dwell-violating genes repaired to the owner.
/// Random initial populations include one all-owner chromosome, and the best
/// chromosome survives every generation.
sim::ScheduleResult mga(Instance instance, const GaConfig& cfg);

/// A trained DDQN policy (GA-DRL with GAT features, DRLOSM with raw features).
struct LearnedPolicy {
  nn::ParamSet params;
  ddqn::PolicyConfig config;
};

/// DRLOSM training: the DDQN pipeline with raw features in the state.
ddqn::TrainResult drlosm_train(const ddqn::InstanceSource& source, ddqn::TrainConfig cfg, std::uint64_t seed);
sim::ScheduleResult drlosm(const LearnedPolicy& policy, Instance instance);

/// Uniform scheduler interface: (instance, seed) -> schedule.
using Scheduler = std::function<sim::ScheduleResult(Instance, std::uint64_t seed)>;

struct SchedulerSettings {
  GaConfig ga;
  std::shared_ptr<const LearnedPolicy> gadrl;
  std::shared_ptr<const LearnedPolicy> drlosm;
};

/// Registered names: lps, heft, mga, drlosm, gadrl, oracle.
const std::vector<std::string>& scheduler_names();
bool is_registered(const std::string& name);
bool is_learned(const std::string& name);
/// Throws std::invalid_argument for an unknown name or a learned scheduler
/// without a policy.
Scheduler make_scheduler(const std::string& name, const SchedulerSettings& settings);

}  // namespace vcsched::baselines
