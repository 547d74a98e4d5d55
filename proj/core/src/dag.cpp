#include "vcsched/dag.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include "vcsched/rng.hpp"

namespace vcsched::dag {

DagTask::DagTask(std::vector<double> workloads, std::vector<DataEdge> edges,
                 std::size_t layer_count, bool add_virtual_source)
    : edges_(std::move(edges)), layer_count_(layer_count) {
  const std::size_t n = workloads.size() + 1;
  subtasks_.reserve(n);
  subtasks_.push_back({kVirtualSource, 0.0, true});
  for (std::size_t i = 0; i < workloads.size(); ++i) {
    subtasks_.push_back({i + 1, workloads[i], false});
  }
  for (const auto& e : edges_) {
    if (e.src >= n || e.dst >= n) {
      throw std::out_of_range("edge (" + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                              ") references an unknown subtask");
    }
  }
  if (add_virtual_source) {
    std::vector<bool> has_pred(n, false);
    for (const auto& e : edges_) has_pred[e.dst] = true;
    std::vector<DataEdge> source_edges;
    for (SubtaskId i = 1; i < n; ++i) {
      if (!has_pred[i]) source_edges.push_back({kVirtualSource, i, 0.0});
    }
    edges_.insert(edges_.begin(), source_edges.begin(), source_edges.end());
  }
  preds_.assign(n, {});
  succs_.assign(n, {});
  for (const auto& e : edges_) {
    succs_[e.src].push_back({e.dst, e.size_mb});
    preds_[e.dst].push_back({e.src, e.size_mb});
  }
  auto by_node = [](const Link& a, const Link& b) { return a.node < b.node; };
  for (auto& p : preds_) std::stable_sort(p.begin(), p.end(), by_node);
  for (auto& s : succs_) std::stable_sort(s.begin(), s.end(), by_node);
}

const Subtask& DagTask::subtask(SubtaskId id) const {
  if (id >= subtasks_.size()) throw std::out_of_range("unknown subtask id " + std::to_string(id));
  return subtasks_[id];
}

std::span<const Link> DagTask::predecessors(SubtaskId id) const {
  if (id >= preds_.size()) throw std::out_of_range("unknown subtask id " + std::to_string(id));
  return preds_[id];
}

std::span<const Link> DagTask::successors(SubtaskId id) const {
  if (id >= succs_.size()) throw std::out_of_range("unknown subtask id " + std::to_string(id));
  return succs_[id];
}

bool DagTask::workloads_equal(const DagTask& other) const {
  if (subtasks_.size() != other.subtasks_.size()) return false;
  for (std::size_t i = 0; i < subtasks_.size(); ++i) {
    if (subtasks_[i].workload_gcycles != other.subtasks_[i].workload_gcycles) return false;
  }
  return true;
}

namespace {

// Kahn's algorithm; returns an empty vector when the graph has a cycle.
std::vector<SubtaskId> topological_order(const DagTask& task) {
  const std::size_t n = task.size();
  std::vector<std::size_t> indeg(n, 0);
  for (const auto& e : task.edges()) ++indeg[e.dst];
  std::queue<SubtaskId> ready;
  for (SubtaskId i = 0; i < n; ++i) {
    if (indeg[i] == 0) ready.push(i);
  }
  std::vector<SubtaskId> order;
  order.reserve(n);
  while (!ready.empty()) {
    const auto i = ready.front();
    ready.pop();
    order.push_back(i);
    for (const auto& s : task.successors(i)) {
      if (--indeg[s.node] == 0) ready.push(s.node);
    }
  }
  if (order.size() != n) order.clear();
  return order;
}

}  // namespace

std::size_t DagTask::longest_path_length() const {
  const auto order = topological_order(*this);
  if (order.empty()) return 0;
  // depth[i]: real subtasks on the longest b0 -> i path, including i.
  std::vector<std::size_t> depth(size(), 0);
  std::size_t best = 0;
  for (const auto i : order) {
    for (const auto& s : successors(i)) {
      depth[s.node] = std::max(depth[s.node], depth[i] + 1);
    }
    best = std::max(best, depth[i]);
  }
  return best;
}

std::vector<std::string> ValidationReport::all() const {
  std::vector<std::string> out;
  for (const auto* group : {&cycles, &unreachable, &duplicate_edges, &invalid_values}) {
    out.insert(out.end(), group->begin(), group->end());
  }
  return out;
}

ValidationReport validate(const DagTask& task) {
  ValidationReport report;
  const std::size_t n = task.size();
  if (n == 0) {
    report.invalid_values.push_back("task has no virtual source");
    return report;
  }

  for (const auto& s : task.subtasks()) {
    if (s.workload_gcycles < 0.0) {
      report.invalid_values.push_back("subtask " + std::to_string(s.id) + " has negative workload");
    }
    if (!s.is_virtual && s.workload_gcycles == 0.0) {
      report.invalid_values.push_back("real subtask " + std::to_string(s.id) + " has zero workload");
    }
  }
  std::set<std::pair<SubtaskId, SubtaskId>> seen;
  for (const auto& e : task.edges()) {
    const auto label = "(" + std::to_string(e.src) + "->" + std::to_string(e.dst) + ")";
    if (e.src == e.dst) report.cycles.push_back("self loop " + label);
    if (e.size_mb < 0.0) report.invalid_values.push_back("negative data size on edge " + label);
    if (e.src == kVirtualSource && e.size_mb != 0.0) {
      report.invalid_values.push_back("virtual-source edge " + label + " carries data");
    }
    if (e.dst == kVirtualSource) {
      report.invalid_values.push_back("edge " + label + " enters the virtual source");
    }
    if (!seen.insert({e.src, e.dst}).second) report.duplicate_edges.push_back("duplicate edge " + label);
  }

  if (report.cycles.empty() && topological_order(task).empty()) {
    report.cycles.push_back("graph contains a directed cycle");
  }

  std::vector<bool> reached(n, false);
  std::vector<SubtaskId> stack{kVirtualSource};
  reached[kVirtualSource] = true;
  while (!stack.empty()) {
    const auto i = stack.back();
    stack.pop_back();
    for (const auto& s : task.successors(i)) {
      if (!reached[s.node]) {
        reached[s.node] = true;
        stack.push_back(s.node);
      }
    }
  }
  for (SubtaskId i = 1; i < n; ++i) {
    if (!reached[i]) report.unreachable.push_back("subtask " + std::to_string(i) + " is not reachable from b0");
  }
  return report;
}

NeighborSets neighbor_sets(const DagTask& task, SubtaskId id) {
  NeighborSets out;
  for (const auto& p : task.predecessors(id)) out.predecessors.push_back(p.node);
  for (const auto& s : task.successors(id)) out.successors.push_back(s.node);
  return out;
}

DagTask generate_random(std::size_t n_subtasks, std::size_t n_layers, std::uint64_t seed,
                        const GeneratorParams& params) {
  if (n_layers == 0 || n_subtasks < n_layers) {
    throw std::invalid_argument("infeasible DAG shape: " + std::to_string(n_subtasks) +
                                " subtasks over " + std::to_string(n_layers) + " layers");
  }
  if (params.max_parents == 0) throw std::invalid_argument("max_parents must be at least 1");

  auto shape_rng = make_rng({seed, 0x5ea9e});
  auto workload_rng = make_rng({seed, 0x3014});
  auto edge_rng = make_rng({seed, 0xed9e});

  // One subtask per layer, the remainder spread multinomially.
  std::vector<std::size_t> layer_size(n_layers, 1);
  std::uniform_int_distribution<std::size_t> pick_layer(0, n_layers - 1);
  for (std::size_t k = n_layers; k < n_subtasks; ++k) ++layer_size[pick_layer(shape_rng)];

  std::vector<std::size_t> layer_begin(n_layers + 1, 1);
  for (std::size_t l = 0; l < n_layers; ++l) layer_begin[l + 1] = layer_begin[l] + layer_size[l];

  std::vector<DataEdge> edges;
  std::uniform_int_distribution<std::size_t> extra_count(0, params.max_parents - 1);
  for (std::size_t l = 1; l < n_layers; ++l) {
    for (SubtaskId node = layer_begin[l]; node < layer_begin[l + 1]; ++node) {
      std::set<SubtaskId> parents;
      std::uniform_int_distribution<SubtaskId> above(layer_begin[l - 1], layer_begin[l] - 1);
      parents.insert(above(shape_rng));
      const std::size_t extra = extra_count(shape_rng);
      const std::size_t candidates = layer_begin[l] - 1;
      std::uniform_int_distribution<SubtaskId> earlier(1, layer_begin[l] - 1);
      for (std::size_t k = 0; k < extra && parents.size() < candidates; ++k) {
        parents.insert(earlier(shape_rng));
      }
      for (const auto p : parents) edges.push_back({p, node, 0.0});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const DataEdge& a, const DataEdge& b) {
    return std::pair(a.src, a.dst) < std::pair(b.src, b.dst);
  });
  for (auto& e : edges) e.size_mb = uniform(edge_rng, params.edge_min_kb, params.edge_max_kb) / 1024.0;

  std::vector<double> workloads(n_subtasks);
  for (auto& w : workloads) w = uniform(workload_rng, params.workload_min_gcycles, params.workload_max_gcycles);

  return DagTask(std::move(workloads), std::move(edges), n_layers);
}

const std::vector<std::pair<SubtaskId, SubtaskId>>& molecular_dynamics_edges() {
  // Nine levels: 1 | 2-7 | 8-14 | 15-21 | 22-28 | 29-34 | 35-38 | 39-40 | 41.
  static const std::vector<std::pair<SubtaskId, SubtaskId>> edges = {
      {1, 2},   {1, 3},   {1, 4},   {1, 5},   {1, 6},   {1, 7},
      {2, 8},   {2, 9},   {3, 9},   {3, 10},  {4, 10},  {4, 11},  {5, 11},  {5, 12},
      {6, 12},  {6, 13},  {7, 13},  {7, 14},
      {8, 15},  {8, 16},  {9, 16},  {9, 17},  {10, 17}, {10, 18}, {11, 18}, {11, 19},
      {12, 19}, {12, 20}, {13, 20}, {13, 21}, {14, 15}, {14, 21},
      {15, 22}, {15, 28}, {16, 22}, {16, 23}, {17, 23}, {17, 24}, {18, 24}, {18, 25},
      {19, 25}, {19, 26}, {20, 26}, {20, 27}, {21, 27}, {21, 28},
      {22, 29}, {23, 29}, {23, 30}, {24, 30}, {24, 31}, {25, 31}, {25, 32}, {26, 32},
      {26, 33}, {27, 33}, {27, 34}, {28, 34},
      {29, 35}, {30, 35}, {30, 36}, {31, 36}, {32, 37}, {33, 37}, {33, 38}, {34, 38},
      {35, 39}, {36, 39}, {37, 40}, {38, 40},
      {39, 41}, {40, 41},
      {3, 24},  {6, 29},  {16, 35},
  };
  return edges;
}

DagTask molecular_dynamics_fixture() {
  constexpr std::uint64_t kFixtureSeed = 20020301;
  constexpr std::size_t kVertices = 41;
  const GeneratorParams params;
  auto workload_rng = make_rng({kFixtureSeed, 0x3014});
  auto edge_rng = make_rng({kFixtureSeed, 0xed9e});

  std::vector<double> workloads(kVertices);
  for (auto& w : workloads) w = uniform(workload_rng, params.workload_min_gcycles, params.workload_max_gcycles);
  std::vector<DataEdge> edges;
  for (const auto& [src, dst] : molecular_dynamics_edges()) {
    edges.push_back({src, dst, uniform(edge_rng, params.edge_min_kb, params.edge_max_kb) / 1024.0});
  }
  const auto layers = DagTask(workloads, edges).longest_path_length();
  return DagTask(std::move(workloads), std::move(edges), layers);
}

nlohmann::json to_json(const DagTask& task) {
  nlohmann::json doc;
  doc["subtasks"] = nlohmann::json::array();
  for (const auto& s : task.subtasks()) {
    doc["subtasks"].push_back({{"id", s.id}, {"workload_gcycles", s.workload_gcycles}});
  }
  doc["edges"] = nlohmann::json::array();
  for (const auto& e : task.edges()) {
    doc["edges"].push_back({{"src", e.src}, {"dst", e.dst}, {"size_mb", e.size_mb}});
  }
  if (task.layer_count() > 0) doc["layers"] = task.layer_count();
  return doc;
}

DagTask dag_from_json(const nlohmann::json& doc) {
  const auto& subtasks = doc.at("subtasks");
  std::size_t max_id = 0;
  for (const auto& s : subtasks) max_id = std::max(max_id, s.at("id").get<std::size_t>());
  std::vector<double> workloads(max_id, 0.0);
  std::vector<bool> present(max_id + 1, false);
  for (const auto& s : subtasks) {
    const auto id = s.at("id").get<std::size_t>();
    if (present[id]) throw std::invalid_argument("duplicate subtask id " + std::to_string(id));
    present[id] = true;
    const double w = s.at("workload_gcycles").get<double>();
    if (id == kVirtualSource) {
      if (w != 0.0) throw std::invalid_argument("virtual source b0 must have zero workload");
      continue;
    }
    workloads[id - 1] = w;
  }
  for (std::size_t id = 1; id <= max_id; ++id) {
    if (!present[id]) throw std::invalid_argument("subtask ids must be contiguous; missing " + std::to_string(id));
  }
  std::vector<DataEdge> edges;
  for (const auto& e : doc.value("edges", nlohmann::json::array())) {
    edges.push_back({e.at("src").get<SubtaskId>(), e.at("dst").get<SubtaskId>(), e.at("size_mb").get<double>()});
  }
  // Source edges already present in the file are kept; missing ones are added.
  return DagTask(std::move(workloads), std::move(edges), doc.value("layers", std::size_t{0}), true);
}

DagTask load_dag(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open DAG file " + path.string());
  return dag_from_json(nlohmann::json::parse(in));
}

void save_dag(const DagTask& task, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write DAG file " + path.string());
  out << to_json(task).dump(2) << '\n';
}

}  // namespace vcsched::dag
