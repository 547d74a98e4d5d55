#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "vcsched/gat.hpp"
#include "vcsched/nn.hpp"
#include "vcsched/rng.hpp"
#include "vcsched/schedule.hpp"

namespace vcsched::ddqn {

using mobility::VehicleIdx;

/// Q-value assigned to masked or padded actions.
inline constexpr double kMaskedQ = -1e30;

enum class FeatureSource {
  gat,  ///< h^(L) of the current subtask (GA-DRL)
  raw,  ///< the 4-component raw feature (DRLOSM)
};

/// Everything needed to rebuild a policy from its parameters.
struct PolicyConfig {
  FeatureSource features = FeatureSource::gat;
  gat::GatConfig gat;
  sim::StateLayout layout;
  std::vector<std::size_t> hidden{128, 128};

  std::size_t feature_dim() const { return features == FeatureSource::gat ? gat.out_dim() : gat::kRawDim; }
  std::size_t input_dim() const { return layout.size(); }
  /// Keeps layout.feature_dim consistent with the feature source.
  void sync();
};

nlohmann::json to_json(const PolicyConfig& cfg);
PolicyConfig policy_config_from_json(const nlohmann::json& doc);

struct TrainConfig {
  PolicyConfig policy;
  double lr = 1e-4;
  double gamma = 0.9;
  /// Probability of the greedy action, annealed linearly over the episodes.
  double epsilon = 0.9;
  double epsilon_final = 0.99;
  std::size_t k_copy = 5;
  std::size_t batch_size = 32;
  std::size_t buffer_capacity = 10000;
  std::size_t episodes = 500;
  /// Gradient steps start once the buffer holds this many transitions.
  std::size_t warmup = 32;
  /// Decision steps at the start of training that pick uniformly among
  /// feasible actions (replay warm-up).
  std::size_t explore_steps = 500;
  /// Gradient steps taken after each decision step.
  std::size_t updates_per_step = 2;
  /// Multiplies rewards before they enter targets.
  double reward_scale = 0.1;
  bool double_q = true;
  gat::Sampling sampling = gat::Sampling::ranked;

  void check() const;
  double epsilon_at(std::size_t episode) const;
};

/// Parameter names: "q/W<k>", "q/b<k>", k = 1..hidden.size()+1.
void init_q_params(nn::ParamSet& params, const PolicyConfig& cfg, Rng& rng);
/// GAT (when used) and Q-network parameters for a fresh policy.
nn::ParamSet init_policy(const PolicyConfig& cfg, std::uint64_t seed);

/// Dense ELU network over rows of x; returns rows of Q-values (|V|_max wide).
nn::Var q_forward(nn::Tape& tape, nn::ParamSet& params, nn::Var x, std::size_t layers);
nn::Tensor q_values(const nn::ParamSet& params, const nn::Tensor& x, std::size_t layers);

/// Q with masked and padded entries replaced by kMaskedQ.
std::vector<double> masked_q(std::span<const double> q, const std::vector<bool>& mask);
/// Index of the largest unmasked Q (lowest index on ties).
VehicleIdx masked_argmax(std::span<const double> q, const std::vector<bool>& mask);

/// With probability `epsilon` the masked argmax, otherwise a uniform feasible
/// action. Throws std::invalid_argument on an all-false mask.
VehicleIdx select_action(std::span<const double> q, const std::vector<bool>& mask, double epsilon, Rng& rng);

struct Transition {
  std::shared_ptr<const sim::ProblemInstance> instance;
  dag::SubtaskId subtask = 0;
  std::vector<double> context;
  VehicleIdx action = 0;
  double reward = 0.0;
  bool terminal = false;
  dag::SubtaskId next_subtask = 0;
  std::vector<double> next_context;
  std::vector<bool> mask_next;
};

/// y = r + gamma * Q_target(s', argmax_a Q_predict(s', a)) over feasible a;
/// y = r when terminal.
double ddqn_target(double reward, bool terminal, std::span<const double> q_predict_next,
                   std::span<const double> q_target_next, const std::vector<bool>& mask_next, double gamma);
/// y = r + gamma * max_a Q_target(s', a) over feasible a.
double dqn_target(double reward, bool terminal, std::span<const double> q_target_next,
                  const std::vector<bool>& mask_next, double gamma);

/// Fixed-capacity FIFO store; the oldest transition is evicted first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t k) const { return items_.at(k); }
  /// Uniform draws with replacement.
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

/// Per-subtask feature rows: GAT output or raw features.
nn::Tensor feature_table(const nn::ParamSet& params, const PolicyConfig& cfg, const sim::ProblemInstance& instance,
                         Rng* rng, gat::Sampling mode);

/// Trainable policy: predict parameters (GAT + Q), target Q parameters and
/// the optimizer state.
class Agent {
 public:
  Agent(TrainConfig cfg, std::uint64_t seed);
  Agent(TrainConfig cfg, nn::ParamSet predict);

  const TrainConfig& config() const { return cfg_; }
  nn::ParamSet& predict() { return predict_; }
  const nn::ParamSet& predict() const { return predict_; }
  nn::ParamSet& target() { return target_; }
  const nn::ParamSet& target() const { return target_; }
  void sync_target();

  /// Joint loss 0.5 * mean (y - Q(s, a))^2 over the batch, recorded on `tape`.
  /// GAT features for s carry gradients; features for s' are detached.
  nn::Var loss(nn::Tape& tape, std::span<const Transition* const> batch, Rng& rng);
  /// One optimizer step on predict (GAT and Q); returns the loss value.
  double train_step(std::span<const Transition* const> batch, Rng& rng);

 private:
  TrainConfig cfg_;
  nn::ParamSet predict_;
  nn::ParamSet target_;
  nn::Adam adam_;
};

struct LogRow {
  std::size_t episode = 0;
  double episode_return = 0.0;
  double makespan = 0.0;
  double epsilon = 0.0;
  double loss_mean = 0.0;
};

void write_log_csv(const std::vector<LogRow>& log, const std::filesystem::path& path);

/// Produces the instance for each training episode.
using InstanceSource = std::function<std::shared_ptr<const sim::ProblemInstance>(std::size_t episode, Rng& rng)>;

struct TrainResult {
  nn::ParamSet params;  ///< predict parameters
  std::vector<LogRow> log;
};

TrainResult train(const InstanceSource& source, const TrainConfig& cfg, std::uint64_t seed);

/// Deterministic greedy rollout with full neighbourhoods.
sim::ScheduleResult greedy_schedule(const nn::ParamSet& params, const PolicyConfig& cfg,
                                    std::shared_ptr<const sim::ProblemInstance> instance);

void save_policy(const std::filesystem::path& path, const nn::ParamSet& params, const PolicyConfig& cfg);
/// Returns parameters and fills `cfg` from the checkpoint metadata.
nn::ParamSet load_policy(const std::filesystem::path& path, PolicyConfig& cfg);

}  // namespace vcsched::ddqn
