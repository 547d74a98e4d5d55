#include "vcsched/gat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace vcsched::gat {

std::vector<RawFeature> raw_features(const dag::DagTask& task) {
  std::vector<RawFeature> out(task.size());
  for (SubtaskId i = 0; i < task.size(); ++i) {
    const auto succ = task.successors(i);
    double total = 0.0;
    for (const auto& s : succ) total += s.size_mb;
    out[i] = {task.workload(i), succ.empty() ? 0.0 : total / static_cast<double>(succ.size()),
              static_cast<double>(task.predecessors(i).size()), static_cast<double>(succ.size())};
  }
  return out;
}

nn::Tensor raw_feature_matrix(const dag::DagTask& task) {
  const auto feats = raw_features(task);
  nn::Tensor m(static_cast<Eigen::Index>(feats.size()), kRawDim);
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    m(r, 0) = feats[i].u;
    m(r, 1) = feats[i].c_bar;
    m(r, 2) = feats[i].n_pred;
    m(r, 3) = feats[i].n_succ;
  }
  return m;
}

SourceDistribution source_distribution(const dag::DagTask& task, SubtaskId i, const dag::RankTable& ranks,
                                       bool inverse, Sampling mode) {
  SourceDistribution d;
  for (const auto& l : inverse ? task.successors(i) : task.predecessors(i)) d.ids.push_back(l.node);
  d.ids.push_back(i);
  std::sort(d.ids.begin(), d.ids.end());
  d.probability.resize(d.ids.size());
  if (mode == Sampling::full) {
    std::fill(d.probability.begin(), d.probability.end(), 1.0 / static_cast<double>(d.ids.size()));
    return d;
  }
  const double sign = mode == Sampling::ranked ? 1.0 : -1.0;
  double peak = -std::numeric_limits<double>::infinity();
  for (const auto j : d.ids) peak = std::max(peak, sign * ranks.rank.at(j));
  double z = 0.0;
  for (std::size_t k = 0; k < d.ids.size(); ++k) z += d.probability[k] = std::exp(sign * ranks.rank[d.ids[k]] - peak);
  for (auto& p : d.probability) p /= z;
  return d;
}

namespace {

std::vector<SubtaskId> draw(const SourceDistribution& d, std::size_t size, Rng& rng, Sampling mode) {
  if (mode == Sampling::full) return d.ids;
  std::vector<SubtaskId> out;
  out.reserve(size);
  if (size > d.ids.size()) {
    std::discrete_distribution<std::size_t> pick(d.probability.begin(), d.probability.end());
    for (std::size_t k = 0; k < size; ++k) out.push_back(d.ids[pick(rng)]);
    return out;
  }
  // Successive weighted draws without replacement.
  auto weights = d.probability;
  for (std::size_t k = 0; k < size; ++k) {
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    const auto at = pick(rng);
    out.push_back(d.ids[at]);
    weights[at] = 0.0;
  }
  return out;
}

}  // namespace

SampledNeighborhood sample_neighborhood(const dag::DagTask& task, SubtaskId i, const dag::RankTable& ranks,
                                        std::size_t size, Rng& rng, Sampling mode) {
  if (size == 0 && mode != Sampling::full) throw std::invalid_argument("sample size must be at least 1");
  SampledNeighborhood nb;
  nb.sample_size = size;
  nb.forward = draw(source_distribution(task, i, ranks, false, mode), size, rng, mode);
  nb.inverse = draw(source_distribution(task, i, ranks, true, mode), size, rng, mode);
  return nb;
}

void GatConfig::check() const {
  if (dims.size() < 2) throw std::invalid_argument("gat: need at least one layer");
  if (heads < 2 || heads % 2 != 0) throw std::invalid_argument("gat: head count must be even and >= 2");
  if (sample_size == 0) throw std::invalid_argument("gat: sample size must be at least 1");
}

std::string weight_name(std::size_t layer, std::size_t head) { return fmt::format("gat/l{}/h{}/W", layer, head); }
std::string attention_name(std::size_t layer, std::size_t head) { return fmt::format("gat/l{}/h{}/A", layer, head); }

void init_params(nn::ParamSet& params, const GatConfig& cfg, Rng& rng) {
  cfg.check();
  for (std::size_t l = 1; l <= cfg.layers(); ++l) {
    const auto in = cfg.dims[l - 1];
    const auto out = cfg.dims[l];
    for (std::size_t z = 1; z <= cfg.heads; ++z) {
      params.add(weight_name(l, z), nn::xavier_uniform(in, out, in, out, rng));
      params.add(attention_name(l, z), nn::xavier_uniform(2 * out, 1, 2 * out, 1, rng));
    }
  }
}

std::vector<SampledNeighborhood> sample_all(const dag::DagTask& task, const dag::RankTable& ranks,
                                            const GatConfig& cfg, Rng& rng, Sampling mode) {
  std::vector<SampledNeighborhood> out;
  out.reserve(task.size());
  for (SubtaskId i = 0; i < task.size(); ++i) out.push_back(sample_neighborhood(task, i, ranks, cfg.sample_size, rng, mode));
  return out;
}

namespace {

template <class ParamFn>
nn::Var forward_impl(nn::Tape& tape, ParamFn&& param, const dag::DagTask& task,
                     const std::vector<SampledNeighborhood>& samples, const GatConfig& cfg, const nn::Tensor* input) {
  cfg.check();
  if (samples.size() != task.size()) throw std::invalid_argument("gat: one sampled neighbourhood per subtask");
  std::vector<std::vector<std::size_t>> fwd(task.size());
  std::vector<std::vector<std::size_t>> inv(task.size());
  for (std::size_t i = 0; i < task.size(); ++i) {
    fwd[i].assign(samples[i].forward.begin(), samples[i].forward.end());
    inv[i].assign(samples[i].inverse.begin(), samples[i].inverse.end());
  }
  auto h = tape.constant(input ? *input : raw_feature_matrix(task));
  if (static_cast<std::size_t>(tape.value(h).cols()) != cfg.dims.front()) {
    throw std::invalid_argument("gat: input width does not match the first layer");
  }
  for (std::size_t l = 1; l <= cfg.layers(); ++l) {
    std::optional<nn::Var> total;
    for (std::size_t z = 1; z <= cfg.heads; ++z) {
      const auto w = param(weight_name(l, z));
      const auto a = param(attention_name(l, z));
      if (static_cast<std::size_t>(tape.value(w).rows()) != cfg.dims[l - 1] ||
          static_cast<std::size_t>(tape.value(w).cols()) != cfg.dims[l] ||
          static_cast<std::size_t>(tape.value(a).rows()) != 2 * cfg.dims[l]) {
        throw std::invalid_argument(fmt::format("gat: parameter shape mismatch at layer {} head {}", l, z));
      }
      const auto hw = tape.matmul(h, w);
      const auto head = tape.attend(hw, a, z <= cfg.heads / 2 ? fwd : inv);
      total = total ? tape.add(*total, head) : head;
    }
    h = tape.elu(tape.scale(*total, 1.0 / static_cast<double>(cfg.heads)));
  }
  return h;
}

}  // namespace

nn::Var forward(nn::Tape& tape, nn::ParamSet& params, const dag::DagTask& task,
                const std::vector<SampledNeighborhood>& samples, const GatConfig& cfg, const nn::Tensor* input) {
  return forward_impl(tape, [&](const std::string& name) { return tape.param(params, name); }, task, samples, cfg,
                      input);
}

nn::Tensor forward_values(const nn::ParamSet& params, const dag::DagTask& task,
                          const std::vector<SampledNeighborhood>& samples, const GatConfig& cfg) {
  nn::Tape tape;
  const auto out = forward_impl(
      tape, [&](const std::string& name) { return tape.constant(params.value(name)); }, task, samples, cfg, nullptr);
  return tape.value(out);
}

}  // namespace vcsched::gat
