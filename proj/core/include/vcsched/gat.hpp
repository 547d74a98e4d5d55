#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vcsched/dag.hpp"
#include "vcsched/nn.hpp"
#include "vcsched/ranking.hpp"
#include "vcsched/rng.hpp"

namespace vcsched::gat {

using dag::SubtaskId;

struct RawFeature {
  double u = 0.0;       ///< workload, Gcycles
  double c_bar = 0.0;   ///< mean outgoing edge size, MB (0 for sinks)
  double n_pred = 0.0;
  double n_succ = 0.0;

  friend bool operator==(const RawFeature&, const RawFeature&) = default;
};

inline constexpr std::size_t kRawDim = 4;

std::vector<RawFeature> raw_features(const dag::DagTask& task);
/// |B| x 4 matrix of raw features, row i = subtask i.
nn::Tensor raw_feature_matrix(const dag::DagTask& task);

enum class Sampling {
  ranked,    ///< p_j proportional to exp(rank_j)
  inverted,  ///< p_j proportional to exp(-rank_j)
  full,      ///< every member of the source set exactly once (deterministic)
};

struct SampledNeighborhood {
  std::vector<SubtaskId> forward;  ///< drawn from P_i + {i}
  std::vector<SubtaskId> inverse;  ///< drawn from S_i + {i}
  std::size_t sample_size = 0;
};

/// Source set (sorted ids) and normalised sampling probabilities for one
/// direction. Weights are max-shifted before exponentiation.
struct SourceDistribution {
  std::vector<SubtaskId> ids;
  std::vector<double> probability;
};
SourceDistribution source_distribution(const dag::DagTask& task, SubtaskId i, const dag::RankTable& ranks,
                                       bool inverse, Sampling mode);

/// Fixed-size weighted sample. Draws without replacement when `size` does not
/// exceed the source set and with replacement otherwise. In `full` mode the
/// whole source set is returned and `size` is ignored.
SampledNeighborhood sample_neighborhood(const dag::DagTask& task, SubtaskId i, const dag::RankTable& ranks,
                                        std::size_t size, Rng& rng, Sampling mode = Sampling::ranked);

struct GatConfig {
  std::size_t heads = 4;
  /// Feature widths per layer boundary: input, hidden..., output.
  std::vector<std::size_t> dims{kRawDim, 16, 32};
  std::size_t sample_size = 3;

  std::size_t layers() const { return dims.size() - 1; }
  std::size_t out_dim() const { return dims.back(); }
  void check() const;
};

/// Parameter names: "gat/l<layer>/h<head>/W" and ".../A", 1-based.
std::string weight_name(std::size_t layer, std::size_t head);
std::string attention_name(std::size_t layer, std::size_t head);

/// Xavier-uniform initialisation of every W and A.
void init_params(nn::ParamSet& params, const GatConfig& cfg, Rng& rng);

/// Neighbourhoods drawn once per forward pass and shared by all layers.
std::vector<SampledNeighborhood> sample_all(const dag::DagTask& task, const dag::RankTable& ranks,
                                            const GatConfig& cfg, Rng& rng, Sampling mode);

/// Records the forward pass on `tape` and returns the |B| x out_dim features.
/// Heads 1..Z/2 attend over forward samples, Z/2+1..Z over inverse samples;
/// head outputs are summed, divided by Z, then passed through ELU.
nn::Var forward(nn::Tape& tape, nn::ParamSet& params, const dag::DagTask& task,
                const std::vector<SampledNeighborhood>& samples, const GatConfig& cfg,
                const nn::Tensor* input = nullptr);

/// Value-only forward pass.
nn::Tensor forward_values(const nn::ParamSet& params, const dag::DagTask& task,
                          const std::vector<SampledNeighborhood>& samples, const GatConfig& cfg);

}  // namespace vcsched::gat
