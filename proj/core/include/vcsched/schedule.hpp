#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vcsched/channel.hpp"
#include "vcsched/dag.hpp"
#include "vcsched/mobility.hpp"
#include "vcsched/ranking.hpp"

namespace vcsched::sim {

using dag::SubtaskId;
using mobility::VehicleIdx;

/// A task, the cloud it runs on and the decision order derived from both.
struct ProblemInstance {
  dag::DagTask task;
  mobility::Fleet fleet;
  channel::ChannelParams channel;
  dag::RankTable ranks;
  dag::PriorityList order;
};

std::shared_ptr<const ProblemInstance> make_instance(dag::DagTask task, mobility::Fleet fleet,
                                                     channel::ChannelParams channel = {});

struct Timing {
  double est = 0.0;
  double eft = 0.0;
};

struct TimelineEntry {
  SubtaskId subtask = 0;
  VehicleIdx vehicle = 0;
  double est = 0.0;
  double eft = 0.0;
  double aft = 0.0;
};

struct ConstraintReport {
  std::vector<std::string> c1_single_vehicle;
  std::vector<std::string> c2_binary;
  std::vector<std::string> c3_disjoint;
  std::vector<std::string> c4_precedence;
  std::vector<std::string> c5_dwell;

  bool ok() const {
    return c1_single_vehicle.empty() && c2_binary.empty() && c3_disjoint.empty() && c4_precedence.empty() &&
           c5_dwell.empty();
  }
  std::vector<std::string> all() const;
};

struct ScheduleResult {
  /// Vehicle per subtask id; b0 sits on the owner.
  std::vector<VehicleIdx> assignment;
  /// Entries in scheduling (priority-list) order, b0 first.
  std::vector<TimelineEntry> timeline;
  double makespan = 0.0;
  bool complete = false;
  bool feasible = false;
  ConstraintReport constraints;
};

/// Online scheduling state for one episode. Subtasks are placed one at a time
/// in priority-list order; each vehicle runs its subtasks back to back in the
/// order they were placed (no insertion into idle gaps).
///
/// A vehicle becomes available at its arrival time, so EST >= AT holds by
/// construction and the dwell constraint reduces to EFT <= DT.
class ScheduleState {
 public:
  explicit ScheduleState(std::shared_ptr<const ProblemInstance> instance);

  const ProblemInstance& instance() const { return *instance_; }
  const std::shared_ptr<const ProblemInstance>& instance_ptr() const { return instance_; }

  /// Real subtasks placed so far; the next decision is step() + 1.
  std::size_t step() const { return step_; }
  std::size_t total_steps() const { return instance_->task.real_count(); }
  bool done() const { return step_ == total_steps(); }
  /// Subtask waiting for a decision. Throws std::logic_error when done.
  SubtaskId current_subtask() const;

  /// Max AFT over the immediate predecessors; 0 for b0. Throws
  /// std::logic_error when a predecessor has not been placed.
  double ready_time(SubtaskId i) const;
  /// Throws std::domain_error when m has already left before the candidate
  /// start (absent for the whole interval).
  Timing est_eft(SubtaskId i, VehicleIdx m) const;
  /// EST/EFT on m without any dwell-window check.
  Timing candidate(SubtaskId i, VehicleIdx m) const;
  bool admits(SubtaskId i, VehicleIdx m) const;
  /// Dwell-window mask for the current subtask over all vehicles.
  std::vector<bool> feasible_actions() const;

  /// Places the current subtask on m and returns the reward: the drop in the
  /// running maximum EFT (always <= 0). Throws std::logic_error if m is masked.
  double apply_action(VehicleIdx m);

  double max_eft() const { return max_eft_; }
  double available_time(VehicleIdx m) const { return avt_.at(m); }
  const std::optional<TimelineEntry>& placement(SubtaskId i) const { return placed_.at(i); }
  std::int64_t current_slot() const;

  ScheduleResult result() const;

 private:
  std::shared_ptr<const ProblemInstance> instance_;
  std::vector<double> avt_;
  std::vector<std::optional<TimelineEntry>> placed_;
  std::vector<TimelineEntry> timeline_;
  std::size_t step_ = 0;
  double max_eft_ = 0.0;
};

ConstraintReport check_constraints(const ScheduleResult& result, const dag::DagTask& task,
                                   const mobility::Fleet& fleet);

/// Runs a full episode where `choose` picks a vehicle for the current subtask
/// given its feasibility mask. Returns the schedule and per-step rewards.
struct Episode {
  ScheduleResult result;
  std::vector<double> rewards;
};
using Policy = std::function<VehicleIdx(const ScheduleState&, const std::vector<bool>&)>;
Episode run_episode(std::shared_ptr<const ProblemInstance> instance, const Policy& choose);

/// Executes a fixed subtask -> vehicle assignment in priority order. Genes
/// that violate the dwell window at placement time are moved to the owner when
/// `repair_to_owner` is set; otherwise the result is returned infeasible and
/// incomplete at the first violation.
ScheduleResult simulate_assignment(std::shared_ptr<const ProblemInstance> instance,
                                   std::span<const VehicleIdx> vehicle_of, bool repair_to_owner);

/// Exhaustive search over every assignment (branch and bound on the running
/// makespan). Limited to |B| <= 7 and |V| <= 4; throws std::invalid_argument
/// beyond that.
ScheduleResult brute_force_optimal(std::shared_ptr<const ProblemInstance> instance);

inline constexpr std::size_t kOracleMaxSubtasks = 7;
inline constexpr std::size_t kOracleMaxVehicles = 4;

/// Fixed-size encoding of the decision state. The feature block is filled by
/// the caller (GAT output or raw feature); this layout covers the rest:
/// allocation history by priority position (vehicle index / |V|, -1 when not
/// yet placed), availability bits and normalised positions per vehicle.
/// With `vehicle_load` set, two more per-vehicle blocks follow: capability
/// f_m / f_max and backlog max(0, AVT_m - RT) normalised by the mean LPS
/// subtask time.
struct StateLayout {
  std::size_t feature_dim = 32;
  std::size_t max_subtasks = 50;
  std::size_t max_vehicles = 20;
  bool vehicle_load = false;

  std::size_t context_size() const {
    return max_subtasks + max_vehicles * (vehicle_load ? 5 : 3);
  }
  std::size_t size() const { return feature_dim + context_size(); }
};

/// Encodes everything but the feature block for the current subtask.
std::vector<double> encode_context(const ScheduleState& state, const StateLayout& layout);

nlohmann::json to_json(const ScheduleResult& result);

}  // namespace vcsched::sim
