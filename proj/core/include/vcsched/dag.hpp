#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace vcsched::dag {

using SubtaskId = std::size_t;

/// Id of the zero-workload virtual source every task carries.
inline constexpr SubtaskId kVirtualSource = 0;

struct Subtask {
  SubtaskId id = 0;
  double workload_gcycles = 0.0;
  bool is_virtual = false;
};

struct DataEdge {
  SubtaskId src = 0;
  SubtaskId dst = 0;
  double size_mb = 0.0;

  friend bool operator==(const DataEdge&, const DataEdge&) = default;
};

/// One endpoint of an adjacency entry: the neighbouring subtask and the data
/// volume carried on the connecting edge.
struct Link {
  SubtaskId node = 0;
  double size_mb = 0.0;
};

/// A DAG application with subtasks 0..n, where 0 is the virtual source.
///
/// The container does not reject malformed graphs (cycles, unreachable
/// nodes, negative values); `validate` reports those. All scheduling code
/// assumes a task that validates cleanly.
class DagTask {
 public:
  DagTask() = default;

  /// Builds a task from the real subtasks' workloads (indexed 1..n, so
  /// `workloads[0]` is subtask 1) and a list of edges. When `add_virtual_source`
  /// is set, edges b0 -> i with zero data are added for every real subtask
  /// that has no predecessor.
  DagTask(std::vector<double> workloads, std::vector<DataEdge> edges,
          std::size_t layer_count = 0, bool add_virtual_source = true);

  /// Total subtask count including the virtual source.
  std::size_t size() const { return subtasks_.size(); }
  /// Number of real (non-virtual) subtasks, |B|.
  std::size_t real_count() const { return subtasks_.empty() ? 0 : subtasks_.size() - 1; }

  const Subtask& subtask(SubtaskId id) const;
  std::span<const Subtask> subtasks() const { return subtasks_; }
  std::span<const DataEdge> edges() const { return edges_; }
  std::span<const Link> predecessors(SubtaskId id) const;
  std::span<const Link> successors(SubtaskId id) const;
  double workload(SubtaskId id) const { return subtask(id).workload_gcycles; }
  std::size_t layer_count() const { return layer_count_; }

  /// Number of subtasks on the longest path starting at b0, b0 excluded.
  /// Returns 0 for cyclic graphs.
  std::size_t longest_path_length() const;

  friend bool operator==(const DagTask& a, const DagTask& b) {
    return a.edges_ == b.edges_ && a.workloads_equal(b);
  }

 private:
  bool workloads_equal(const DagTask& other) const;

  std::vector<Subtask> subtasks_;
  std::vector<DataEdge> edges_;
  std::vector<std::vector<Link>> preds_;
  std::vector<std::vector<Link>> succs_;
  std::size_t layer_count_ = 0;
};

struct ValidationReport {
  std::vector<std::string> cycles;
  std::vector<std::string> unreachable;
  std::vector<std::string> duplicate_edges;
  std::vector<std::string> invalid_values;

  bool ok() const {
    return cycles.empty() && unreachable.empty() && duplicate_edges.empty() &&
           invalid_values.empty();
  }
  std::vector<std::string> all() const;
};

ValidationReport validate(const DagTask& task);

struct NeighborSets {
  std::vector<SubtaskId> predecessors;
  std::vector<SubtaskId> successors;
};

/// Immediate predecessor and successor ids of `id`, sorted ascending.
/// Throws std::out_of_range for an unknown id.
NeighborSets neighbor_sets(const DagTask& task, SubtaskId id);

/// Ranges for the layered random generator. Edge sizes are given in KB and
/// stored in MB (KB / 1024).
struct GeneratorParams {
  double workload_min_gcycles = 1.0;
  double workload_max_gcycles = 2.0;
  double edge_min_kb = 100.0;
  double edge_max_kb = 500.0;
  std::size_t max_parents = 3;
};

/// Layered random DAG. Subtasks are split into `n_layers` non-empty layers
/// (sizes drawn multinomially); every subtask past the first layer gets one
/// parent in the layer directly above plus up to `max_parents - 1` further
/// parents from any earlier layer. Workloads use a seed stream of their own so
/// that tasks with the same seed and subtask count share workloads whatever
/// the layer count.
///
/// Throws std::invalid_argument when n_subtasks < n_layers or n_layers == 0.
DagTask generate_random(std::size_t n_subtasks, std::size_t n_layers, std::uint64_t seed,
                        const GeneratorParams& params = {});

/// The 41-vertex molecular-dynamics task graph with workloads and edge sizes
/// drawn from the default generator ranges under a fixed seed.
DagTask molecular_dynamics_fixture();

/// Edge list (1-based vertex ids) of the molecular-dynamics topology.
const std::vector<std::pair<SubtaskId, SubtaskId>>& molecular_dynamics_edges();

nlohmann::json to_json(const DagTask& task);
DagTask dag_from_json(const nlohmann::json& doc);
DagTask load_dag(const std::filesystem::path& path);
void save_dag(const DagTask& task, const std::filesystem::path& path);

}  // namespace vcsched::dag
