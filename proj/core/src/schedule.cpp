#include "vcsched/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

namespace vcsched::sim {

namespace {

constexpr double kTol = 1e-9;

std::int64_t slot_of(double t, const mobility::MobilityParams& p) {
  return static_cast<std::int64_t>(std::floor(t / p.slot_length));
}

}  // namespace

std::shared_ptr<const ProblemInstance> make_instance(dag::DagTask task, mobility::Fleet fleet,
                                                     channel::ChannelParams channel) {
  if (fleet.empty()) throw std::invalid_argument("instance needs at least the owner vehicle");
  channel.check();
  auto ranks = dag::compute_ranks(task, fleet, channel);
  auto order = dag::priority_list(ranks);
  return std::make_shared<const ProblemInstance>(
      ProblemInstance{std::move(task), std::move(fleet), channel, std::move(ranks), std::move(order)});
}

std::vector<std::string> ConstraintReport::all() const {
  std::vector<std::string> out;
  for (const auto* list : {&c1_single_vehicle, &c2_binary, &c3_disjoint, &c4_precedence, &c5_dwell}) {
    out.insert(out.end(), list->begin(), list->end());
  }
  return out;
}

ScheduleState::ScheduleState(std::shared_ptr<const ProblemInstance> instance) : instance_(std::move(instance)) {
  if (!instance_) throw std::invalid_argument("ScheduleState: null instance");
  const auto& fleet = instance_->fleet;
  avt_.resize(fleet.size());
  for (VehicleIdx m = 0; m < fleet.size(); ++m) avt_[m] = fleet.vehicle(m).arrival_at;
  placed_.resize(instance_->task.size());
  // The virtual source is pinned to the owner at time zero.
  const TimelineEntry source{dag::kVirtualSource, mobility::kOwner, 0.0, 0.0, 0.0};
  placed_[dag::kVirtualSource] = source;
  timeline_.push_back(source);
}

SubtaskId ScheduleState::current_subtask() const {
  if (done()) throw std::logic_error("episode is finished");
  return instance_->order.order[step_ + 1];
}

double ScheduleState::ready_time(SubtaskId i) const {
  double rt = 0.0;
  for (const auto& p : instance_->task.predecessors(i)) {
    const auto& at = placed_.at(p.node);
    if (!at) throw std::logic_error(fmt::format("subtask {} has unplaced predecessor {}", i, p.node));
    rt = std::max(rt, at->aft);
  }
  return rt;
}

Timing ScheduleState::est_eft(SubtaskId i, VehicleIdx m) const {
  const auto t = candidate(i, m);
  if (t.est > instance_->fleet.vehicle(m).departure_dt + kTol) {
    throw std::domain_error(fmt::format("vehicle {} has left before subtask {} could start", m + 1, i));
  }
  return t;
}

Timing ScheduleState::candidate(SubtaskId i, VehicleIdx m) const {
  const auto& inst = *instance_;
  if (m >= inst.fleet.size()) throw std::out_of_range(fmt::format("vehicle index {} out of range", m));
  const double rt = ready_time(i);
  const auto slot = slot_of(rt, inst.fleet.params());
  double transfer = 0.0;
  for (const auto& p : inst.task.predecessors(i)) {
    transfer =
        std::max(transfer, channel::link_time(p.size_mb, placed_[p.node]->vehicle, m, slot, inst.fleet, inst.channel));
  }
  Timing t;
  t.est = std::max(avt_[m], rt + transfer);
  t.eft = t.est + inst.task.workload(i) / inst.fleet.vehicle(m).capability_f;
  return t;
}

bool ScheduleState::admits(SubtaskId i, VehicleIdx m) const {
  const auto& v = instance_->fleet.vehicle(m);
  const auto t = candidate(i, m);
  return t.est >= v.arrival_at - kTol && t.eft <= v.departure_dt + kTol;
}

std::vector<bool> ScheduleState::feasible_actions() const {
  const auto i = current_subtask();
  std::vector<bool> mask(instance_->fleet.size());
  for (VehicleIdx m = 0; m < mask.size(); ++m) mask[m] = admits(i, m);
  return mask;
}

std::int64_t ScheduleState::current_slot() const {
  return slot_of(ready_time(current_subtask()), instance_->fleet.params());
}

double ScheduleState::apply_action(VehicleIdx m) {
  const auto i = current_subtask();
  if (!admits(i, m)) throw std::logic_error(fmt::format("vehicle {} is masked for subtask {}", m, i));
  const auto t = candidate(i, m);
  const TimelineEntry entry{i, m, t.est, t.eft, t.eft};
  placed_[i] = entry;
  timeline_.push_back(entry);
  avt_[m] = t.eft;
  const double before = max_eft_;
  max_eft_ = std::max(max_eft_, t.eft);
  ++step_;
  return before - max_eft_;
}

ScheduleResult ScheduleState::result() const {
  const auto& inst = *instance_;
  ScheduleResult r;
  r.assignment.assign(inst.task.size(), mobility::kOwner);
  for (const auto& e : timeline_) r.assignment[e.subtask] = e.vehicle;
  r.timeline = timeline_;
  r.makespan = max_eft_;
  r.complete = done();
  if (r.complete) {
    r.constraints = check_constraints(r, inst.task, inst.fleet);
    r.feasible = r.constraints.ok();
  }
  return r;
}

ConstraintReport check_constraints(const ScheduleResult& result, const dag::DagTask& task,
                                   const mobility::Fleet& fleet) {
  ConstraintReport rep;
  std::vector<const TimelineEntry*> by_id(task.size(), nullptr);
  for (const auto& e : result.timeline) {
    if (e.subtask >= task.size()) {
      rep.c1_single_vehicle.push_back(fmt::format("unknown subtask {}", e.subtask));
      continue;
    }
    if (by_id[e.subtask]) rep.c1_single_vehicle.push_back(fmt::format("subtask {} scheduled twice", e.subtask));
    by_id[e.subtask] = &e;
    if (e.vehicle >= fleet.size()) {
      rep.c2_binary.push_back(fmt::format("subtask {} on unknown vehicle {}", e.subtask, e.vehicle));
    }
    if (e.subtask < result.assignment.size() && result.assignment[e.subtask] != e.vehicle) {
      rep.c2_binary.push_back(fmt::format("subtask {} assignment disagrees with timeline", e.subtask));
    }
  }
  for (SubtaskId i = 0; i < task.size(); ++i) {
    if (!by_id[i]) rep.c1_single_vehicle.push_back(fmt::format("subtask {} not scheduled", i));
  }
  if (!rep.c1_single_vehicle.empty() || !rep.c2_binary.empty()) return rep;

  std::map<VehicleIdx, std::vector<const TimelineEntry*>> per_vehicle;
  for (const auto& e : result.timeline) {
    if (e.eft > e.est) per_vehicle[e.vehicle].push_back(&e);
  }
  for (auto& [m, list] : per_vehicle) {
    std::sort(list.begin(), list.end(), [](auto* a, auto* b) { return a->est < b->est; });
    for (std::size_t k = 1; k < list.size(); ++k) {
      if (list[k]->est < list[k - 1]->eft - kTol) {
        rep.c3_disjoint.push_back(fmt::format("subtasks {} and {} overlap on vehicle {}", list[k - 1]->subtask,
                                              list[k]->subtask, m + 1));
      }
    }
  }
  for (const auto& e : task.edges()) {
    if (by_id[e.dst]->est < by_id[e.src]->aft - kTol) {
      rep.c4_precedence.push_back(fmt::format("subtask {} starts before predecessor {} finishes", e.dst, e.src));
    }
  }
  for (const auto& e : result.timeline) {
    if (e.subtask == dag::kVirtualSource) continue;
    const auto& v = fleet.vehicle(e.vehicle);
    if (e.est < v.arrival_at - kTol || e.eft > v.departure_dt + kTol) {
      rep.c5_dwell.push_back(fmt::format("subtask {} runs outside the dwell window of vehicle {}", e.subtask, v.id));
    }
  }
  return rep;
}

Episode run_episode(std::shared_ptr<const ProblemInstance> instance, const Policy& choose) {
  ScheduleState state(std::move(instance));
  Episode ep;
  while (!state.done()) {
    const auto mask = state.feasible_actions();
    ep.rewards.push_back(state.apply_action(choose(state, mask)));
  }
  ep.result = state.result();
  return ep;
}

ScheduleResult simulate_assignment(std::shared_ptr<const ProblemInstance> instance,
                                   std::span<const VehicleIdx> vehicle_of, bool repair_to_owner) {
  if (vehicle_of.size() != instance->task.size()) {
    throw std::invalid_argument("assignment length must equal the subtask count");
  }
  ScheduleState state(std::move(instance));
  while (!state.done()) {
    const auto i = state.current_subtask();
    auto m = vehicle_of[i];
    if (m >= state.instance().fleet.size() || !state.admits(i, m)) {
      if (!repair_to_owner) return state.result();
      m = mobility::kOwner;
    }
    state.apply_action(m);
  }
  return state.result();
}

ScheduleResult brute_force_optimal(std::shared_ptr<const ProblemInstance> instance) {
  if (instance->task.real_count() > kOracleMaxSubtasks || instance->fleet.size() > kOracleMaxVehicles) {
    throw std::invalid_argument(fmt::format("oracle limited to {} subtasks and {} vehicles", kOracleMaxSubtasks,
                                            kOracleMaxVehicles));
  }
  std::optional<ScheduleState> best;
  double best_makespan = std::numeric_limits<double>::infinity();
  auto search = [&](auto&& self, const ScheduleState& state) -> void {
    if (state.max_eft() >= best_makespan) return;
    if (state.done()) {
      best_makespan = state.max_eft();
      best = state;
      return;
    }
    const auto mask = state.feasible_actions();
    for (VehicleIdx m = 0; m < mask.size(); ++m) {
      if (!mask[m]) continue;
      ScheduleState next = state;
      next.apply_action(m);
      self(self, next);
    }
  };
  search(search, ScheduleState(std::move(instance)));
  if (!best) throw std::runtime_error("oracle found no feasible schedule");
  return best->result();
}

std::vector<double> encode_context(const ScheduleState& state, const StateLayout& layout) {
  const auto& inst = state.instance();
  const auto n_real = inst.task.real_count();
  const auto n_veh = inst.fleet.size();
  if (n_real > layout.max_subtasks || n_veh > layout.max_vehicles) {
    throw std::invalid_argument(fmt::format("instance ({} subtasks, {} vehicles) exceeds state layout ({}, {})", n_real,
                                            n_veh, layout.max_subtasks, layout.max_vehicles));
  }
  std::vector<double> out(layout.context_size(), 0.0);
  auto* history = out.data();
  auto* avail = history + layout.max_subtasks;
  auto* pos = avail + layout.max_vehicles;

  for (std::size_t k = 0; k < layout.max_subtasks; ++k) history[k] = -1.0;
  for (std::size_t k = 1; k <= n_real; ++k) {
    const auto& at = state.placement(inst.order.order[k]);
    if (at) history[k - 1] = static_cast<double>(at->vehicle) / static_cast<double>(n_veh);
  }
  if (state.done()) return out;

  const auto mask = state.feasible_actions();
  const auto slot = state.current_slot();
  for (VehicleIdx m = 0; m < n_veh; ++m) {
    avail[m] = mask[m] ? 1.0 : 0.0;
    const auto p = inst.fleet.normalized_position(m, slot);
    pos[2 * m] = p.x;
    pos[2 * m + 1] = p.y;
  }
  if (layout.vehicle_load) {
    auto* cap = pos + 2 * layout.max_vehicles;
    auto* backlog = cap + layout.max_vehicles;
    const double f_max = inst.fleet.max_capability();
    const double owner_f = inst.fleet.vehicle(mobility::kOwner).capability_f;
    double total = 0.0;
    for (SubtaskId i = 1; i < inst.task.size(); ++i) total += inst.task.workload(i);
    const double unit = total > 0.0 ? total / static_cast<double>(n_real) / owner_f : 1.0;
    const double rt = state.ready_time(state.current_subtask());
    for (VehicleIdx m = 0; m < n_veh; ++m) {
      cap[m] = inst.fleet.vehicle(m).capability_f / f_max;
      backlog[m] = std::max(0.0, state.available_time(m) - rt) / unit;
    }
  }
  return out;
}

nlohmann::json to_json(const ScheduleResult& result) {
  nlohmann::json timeline = nlohmann::json::array();
  for (const auto& e : result.timeline) {
    timeline.push_back({{"subtask", e.subtask}, {"vehicle", e.vehicle + 1}, {"est", e.est}, {"eft", e.eft}, {"aft", e.aft}});
  }
  nlohmann::json assignment = nlohmann::json::array();
  for (const auto m : result.assignment) assignment.push_back(m + 1);
  return {{"makespan", result.makespan},
          {"complete", result.complete},
          {"feasible", result.feasible},
          {"violations", result.constraints.all()},
          {"assignment", assignment},
          {"timeline", timeline}};
}

}  // namespace vcsched::sim
