#include "vcsched/ranking.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace vcsched::dag {

std::vector<std::size_t> PriorityList::positions() const {
  std::vector<std::size_t> pos(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) pos.at(order[k]) = k;
  return pos;
}

double mean_execution_cost(const DagTask& task, SubtaskId i, const mobility::Fleet& fleet) {
  if (fleet.empty()) throw std::invalid_argument("ranking needs at least one vehicle");
  double sum = 0.0;
  for (const auto& v : fleet.vehicles()) sum += task.workload(i) / v.capability_f;
  return sum / static_cast<double>(fleet.size());
}

double mean_transfer_cost(double c_mb, const mobility::Fleet& fleet, const channel::ChannelParams& chan) {
  if (fleet.empty()) throw std::invalid_argument("ranking needs at least one vehicle");
  if (c_mb == 0.0) return 0.0;
  return c_mb * mean_transfer_cost_per_mb(fleet, chan);
}

double mean_transfer_cost_per_mb(const mobility::Fleet& fleet, const channel::ChannelParams& chan) {
  auto deterministic = chan;
  deterministic.mode = channel::ChannelMode::deterministic;
  const std::size_t n = fleet.size();
  double sum = 0.0;
  for (mobility::VehicleIdx m = 0; m < n; ++m) {
    for (mobility::VehicleIdx k = 0; k < n; ++k) sum += channel::link_time(1.0, m, k, 0, fleet, deterministic);
  }
  return sum / static_cast<double>(n * n);
}

RankTable compute_ranks(const DagTask& task, const mobility::Fleet& fleet, const channel::ChannelParams& chan) {
  RankTable table;
  table.rank.assign(task.size(), 0.0);
  std::vector<double> exec(task.size());
  for (SubtaskId i = 0; i < task.size(); ++i) exec[i] = mean_execution_cost(task, i, fleet);
  const double per_mb = mean_transfer_cost_per_mb(fleet, chan);

  // Predecessor recursion evaluated in topological order.
  std::vector<std::size_t> indeg(task.size(), 0);
  for (const auto& e : task.edges()) ++indeg[e.dst];
  std::vector<SubtaskId> ready;
  for (SubtaskId i = 0; i < task.size(); ++i) {
    if (indeg[i] == 0) ready.push_back(i);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    const auto j = ready.back();
    ready.pop_back();
    ++visited;
    for (const auto& s : task.successors(j)) {
      const double candidate = table.rank[j] + exec[j] + s.size_mb * per_mb;
      table.rank[s.node] = std::max(table.rank[s.node], candidate);
      if (--indeg[s.node] == 0) ready.push_back(s.node);
    }
  }
  if (visited != task.size()) throw std::invalid_argument("compute_ranks: task graph has a cycle");
  return table;
}

PriorityList priority_list(const RankTable& ranks) {
  PriorityList list;
  list.order.resize(ranks.rank.size());
  std::iota(list.order.begin(), list.order.end(), SubtaskId{0});
  std::stable_sort(list.order.begin(), list.order.end(), [&](SubtaskId a, SubtaskId b) {
    if (ranks.rank[a] != ranks.rank[b]) return ranks.rank[a] < ranks.rank[b];
    return a < b;
  });
  return list;
}

}  // namespace vcsched::dag
