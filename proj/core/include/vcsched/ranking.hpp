#pragma once

#include <vector>

#include "vcsched/channel.hpp"
#include "vcsched/dag.hpp"
#include "vcsched/mobility.hpp"

namespace vcsched::dag {

/// rank[i] in seconds, indexed by subtask id; rank[0] = 0.
struct RankTable {
  std::vector<double> rank;
};

/// Scheduling order: subtask ids by ascending rank, ties by ascending id.
struct PriorityList {
  std::vector<SubtaskId> order;

  /// Inverse permutation: position of each subtask id in `order`.
  std::vector<std::size_t> positions() const;
};

/// Mean execution time of subtask i over the fleet: mean_m u_i / f_m.
double mean_execution_cost(const DagTask& task, SubtaskId i, const mobility::Fleet& fleet);

/// Mean transfer time of c MB over all ordered vehicle pairs (self pairs
/// included, contributing 0) at slot 0.
double mean_transfer_cost(double c_mb, const mobility::Fleet& fleet, const channel::ChannelParams& chan);
double mean_transfer_cost_per_mb(const mobility::Fleet& fleet, const channel::ChannelParams& chan);

/// rank_i = max over predecessors j of rank_j + mean_execution_cost(j) +
/// mean_transfer_cost(c_ji). The channel is always evaluated in deterministic
/// mode here so ranks do not depend on the channel seed.
RankTable compute_ranks(const DagTask& task, const mobility::Fleet& fleet, const channel::ChannelParams& chan);

PriorityList priority_list(const RankTable& ranks);

}  // namespace vcsched::dag
