#include "vcsched/ddqn.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace vcsched::ddqn {

void PolicyConfig::sync() { layout.feature_dim = feature_dim(); }

nlohmann::json to_json(const PolicyConfig& cfg) {
  return {{"features", cfg.features == FeatureSource::gat ? "gat" : "raw"},
          {"gat", {{"heads", cfg.gat.heads}, {"dims", cfg.gat.dims}, {"sample_size", cfg.gat.sample_size}}},
          {"layout",
           {{"feature_dim", cfg.layout.feature_dim},
            {"max_subtasks", cfg.layout.max_subtasks},
            {"max_vehicles", cfg.layout.max_vehicles},
            {"vehicle_load", cfg.layout.vehicle_load}}},
          {"hidden", cfg.hidden}};
}

PolicyConfig policy_config_from_json(const nlohmann::json& doc) {
  PolicyConfig cfg;
  const auto features = doc.at("features").get<std::string>();
  if (features != "gat" && features != "raw") throw std::runtime_error("unknown feature source " + features);
  cfg.features = features == "gat" ? FeatureSource::gat : FeatureSource::raw;
  const auto& g = doc.at("gat");
  cfg.gat.heads = g.at("heads").get<std::size_t>();
  cfg.gat.dims = g.at("dims").get<std::vector<std::size_t>>();
  cfg.gat.sample_size = g.at("sample_size").get<std::size_t>();
  const auto& l = doc.at("layout");
  cfg.layout.feature_dim = l.at("feature_dim").get<std::size_t>();
  cfg.layout.max_subtasks = l.at("max_subtasks").get<std::size_t>();
  cfg.layout.max_vehicles = l.at("max_vehicles").get<std::size_t>();
  cfg.layout.vehicle_load = l.at("vehicle_load").get<bool>();
  cfg.hidden = doc.at("hidden").get<std::vector<std::size_t>>();
  return cfg;
}

void TrainConfig::check() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  if (epsilon < 0.0 || epsilon > 1.0 || epsilon_final < 0.0 || epsilon_final > 1.0) {
    throw std::invalid_argument("epsilon must lie in [0, 1]");
  }
  if (updates_per_step == 0) throw std::invalid_argument("updates_per_step must be at least 1");
  if (k_copy == 0) throw std::invalid_argument("k_copy must be at least 1");
  if (batch_size == 0) throw std::invalid_argument("batch size must be at least 1");
  if (buffer_capacity == 0) throw std::invalid_argument("buffer capacity must be at least 1");
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (policy.layout.feature_dim != policy.feature_dim()) {
    throw std::invalid_argument("state layout feature width does not match the feature source");
  }
  policy.gat.check();
}

double TrainConfig::epsilon_at(std::size_t episode) const {
  if (episodes <= 1) return epsilon;
  const double frac = std::min(1.0, static_cast<double>(episode) / static_cast<double>(episodes - 1));
  return epsilon + (epsilon_final - epsilon) * frac;
}

namespace {

std::string q_weight(std::size_t k) { return fmt::format("q/W{}", k); }
std::string q_bias(std::size_t k) { return fmt::format("q/b{}", k); }

}  // namespace

void init_q_params(nn::ParamSet& params, const PolicyConfig& cfg, Rng& rng) {
  std::vector<std::size_t> dims{cfg.input_dim()};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(cfg.layout.max_vehicles);
  for (std::size_t k = 1; k < dims.size(); ++k) {
    params.add(q_weight(k), nn::xavier_uniform(dims[k - 1], dims[k], dims[k - 1], dims[k], rng));
    params.add(q_bias(k), nn::Tensor::Zero(1, static_cast<Eigen::Index>(dims[k])));
  }
}

nn::ParamSet init_policy(const PolicyConfig& cfg, std::uint64_t seed) {
  nn::ParamSet params;
  auto rng = make_rng({seed, 0x9a7});
  if (cfg.features == FeatureSource::gat) gat::init_params(params, cfg.gat, rng);
  init_q_params(params, cfg, rng);
  return params;
}

nn::Var q_forward(nn::Tape& tape, nn::ParamSet& params, nn::Var x, std::size_t layers) {
  for (std::size_t k = 1; k <= layers; ++k) {
    x = tape.add_row(tape.matmul(x, tape.param(params, q_weight(k))), tape.param(params, q_bias(k)));
    if (k < layers) x = tape.elu(x);
  }
  return x;
}

nn::Tensor q_values(const nn::ParamSet& params, const nn::Tensor& x, std::size_t layers) {
  nn::Tensor h = x;
  for (std::size_t k = 1; k <= layers; ++k) {
    const auto& w = params.value(q_weight(k));
    if (h.cols() != w.rows()) throw std::invalid_argument("q network input width mismatch");
    nn::Tensor next = h * w;
    next.rowwise() += params.value(q_bias(k)).row(0);
    if (k < layers) next = next.unaryExpr([](double v) { return nn::elu(v); });
    h = std::move(next);
  }
  return h;
}

std::vector<double> masked_q(std::span<const double> q, const std::vector<bool>& mask) {
  std::vector<double> out(q.begin(), q.end());
  for (std::size_t m = 0; m < out.size(); ++m) {
    if (m >= mask.size() || !mask[m]) out[m] = kMaskedQ;
  }
  return out;
}

VehicleIdx masked_argmax(std::span<const double> q, const std::vector<bool>& mask) {
  std::optional<VehicleIdx> best;
  for (VehicleIdx m = 0; m < std::min(q.size(), mask.size()); ++m) {
    if (mask[m] && (!best || q[m] > q[*best])) best = m;
  }
  if (!best) throw std::invalid_argument("no feasible action");
  return *best;
}

VehicleIdx select_action(std::span<const double> q, const std::vector<bool>& mask, double epsilon, Rng& rng) {
  std::vector<VehicleIdx> feasible;
  for (VehicleIdx m = 0; m < std::min(q.size(), mask.size()); ++m) {
    if (mask[m]) feasible.push_back(m);
  }
  if (feasible.empty()) throw std::invalid_argument("no feasible action");
  if (feasible.size() == 1) return feasible.front();
  if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < epsilon) return masked_argmax(q, mask);
  return feasible[std::uniform_int_distribution<std::size_t>(0, feasible.size() - 1)(rng)];
}

double ddqn_target(double reward, bool terminal, std::span<const double> q_predict_next,
                   std::span<const double> q_target_next, const std::vector<bool>& mask_next, double gamma) {
  if (terminal) return reward;
  return reward + gamma * q_target_next[masked_argmax(q_predict_next, mask_next)];
}

double dqn_target(double reward, bool terminal, std::span<const double> q_target_next,
                  const std::vector<bool>& mask_next, double gamma) {
  if (terminal) return reward;
  return reward + gamma * q_target_next[masked_argmax(q_target_next, mask_next)];
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be at least 1");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (items_.empty()) throw std::logic_error("sampling from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<const Transition*> out(n);
  for (auto& p : out) p = &items_[pick(rng)];
  return out;
}

nn::Tensor feature_table(const nn::ParamSet& params, const PolicyConfig& cfg, const sim::ProblemInstance& instance,
                         Rng* rng, gat::Sampling mode) {
  if (cfg.features == FeatureSource::raw) return gat::raw_feature_matrix(instance.task);
  if (mode != gat::Sampling::full && !rng) throw std::invalid_argument("stochastic sampling needs an rng");
  Rng unused;
  const auto samples = gat::sample_all(instance.task, instance.ranks, cfg.gat, rng ? *rng : unused, mode);
  return gat::forward_values(params, instance.task, samples, cfg.gat);
}

namespace {

nn::Tensor state_row(const nn::Tensor& features, dag::SubtaskId i, const std::vector<double>& context) {
  nn::Tensor x(1, features.cols() + static_cast<Eigen::Index>(context.size()));
  x.leftCols(features.cols()) = features.row(static_cast<Eigen::Index>(i));
  for (std::size_t k = 0; k < context.size(); ++k) x(0, features.cols() + static_cast<Eigen::Index>(k)) = context[k];
  return x;
}

}  // namespace

Agent::Agent(TrainConfig cfg, std::uint64_t seed) : Agent(cfg, init_policy(cfg.policy, seed)) {}

Agent::Agent(TrainConfig cfg, nn::ParamSet predict)
    : cfg_(std::move(cfg)), predict_(std::move(predict)), adam_(nn::AdamConfig{cfg_.lr}) {
  cfg_.check();
  target_ = predict_.subset("q/");
}

void Agent::sync_target() { target_.copy_values_from(predict_.subset("q/")); }

nn::Var Agent::loss(nn::Tape& tape, std::span<const Transition* const> batch, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("empty training batch");
  const auto& pc = cfg_.policy;
  const auto layers = pc.hidden.size() + 1;
  const auto n = static_cast<Eigen::Index>(batch.size());
  const auto fdim = static_cast<Eigen::Index>(pc.feature_dim());
  const auto cdim = static_cast<Eigen::Index>(pc.layout.context_size());

  // Group by instance in order of first appearance so rng use is reproducible.
  std::vector<std::pair<const sim::ProblemInstance*, std::vector<std::size_t>>> groups;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto* inst = batch[b]->instance.get();
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == inst; });
    if (it == groups.end()) {
      groups.push_back({inst, {}});
      it = std::prev(groups.end());
    }
    it->second.push_back(b);
  }

  std::vector<nn::Var> rows(batch.size());
  nn::Tensor context(n, cdim);
  nn::Tensor next_x = nn::Tensor::Zero(n, fdim + cdim);
  for (const auto& [inst, members] : groups) {
    nn::Var h;
    if (pc.features == FeatureSource::gat) {
      const auto samples = gat::sample_all(inst->task, inst->ranks, pc.gat, rng, cfg_.sampling);
      h = gat::forward(tape, predict_, inst->task, samples, pc.gat);
    } else {
      h = tape.constant(gat::raw_feature_matrix(inst->task));
    }
    const nn::Tensor hv = tape.value(h);
    for (const auto b : members) {
      const auto& t = *batch[b];
      const std::size_t idx[] = {t.subtask};
      rows[b] = tape.gather_rows(h, idx);
      const auto r = static_cast<Eigen::Index>(b);
      context.row(r) = Eigen::Map<const Eigen::RowVectorXd>(t.context.data(), cdim);
      if (!t.terminal) next_x.row(r) = state_row(hv, t.next_subtask, t.next_context).row(0);
    }
  }
  const auto x = tape.concat_cols(tape.stack_rows(rows), tape.constant(std::move(context)));

  const auto qp_next = q_values(predict_, next_x, layers);
  const auto qt_next = q_values(target_, next_x, layers);
  nn::Tensor y(n, 1);
  std::vector<std::size_t> actions(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& t = *batch[b];
    const auto r = static_cast<Eigen::Index>(b);
    const std::span<const double> qp(qp_next.row(r).data(), static_cast<std::size_t>(qp_next.cols()));
    const std::span<const double> qt(qt_next.row(r).data(), static_cast<std::size_t>(qt_next.cols()));
    const double reward = cfg_.reward_scale * t.reward;
    y(r, 0) = cfg_.double_q ? ddqn_target(reward, t.terminal, qp, qt, t.mask_next, cfg_.gamma)
                            : dqn_target(reward, t.terminal, qt, t.mask_next, cfg_.gamma);
    actions[b] = t.action;
  }
  const auto q = tape.pick(q_forward(tape, predict_, x, layers), actions);
  return tape.scale(tape.mse(q, tape.constant(std::move(y))), 0.5);
}

double Agent::train_step(std::span<const Transition* const> batch, Rng& rng) {
  nn::Tape tape;
  const auto l = loss(tape, batch, rng);
  predict_.zero_grad();
  tape.backward(l);
  adam_.step(predict_);
  return tape.value(l)(0, 0);
}

void write_log_csv(const std::vector<LogRow>& log, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "episode,return,makespan,epsilon,loss_mean\n";
  for (const auto& r : log) {
    out << fmt::format("{},{},{},{},{}\n", r.episode, r.episode_return, r.makespan, r.epsilon, r.loss_mean);
  }
}

TrainResult train(const InstanceSource& source, const TrainConfig& cfg, std::uint64_t seed) {
  Agent agent(cfg, seed);
  auto rng = make_rng({seed, 0x7a1e});
  ReplayBuffer buffer(cfg.buffer_capacity);
  const auto& pc = agent.config().policy;
  const auto layers = pc.hidden.size() + 1;
  std::size_t steps = 0;
  TrainResult result;

  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    const auto instance = source(ep, rng);
    const double eps = cfg.epsilon_at(ep);
    const auto features = feature_table(agent.predict(), pc, *instance, &rng, cfg.sampling);
    sim::ScheduleState state(instance);
    double ret = 0.0;
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    auto subtask = state.current_subtask();
    auto context = sim::encode_context(state, pc.layout);
    auto mask = state.feasible_actions();
    while (!state.done()) {
      const auto q = q_values(agent.predict(), state_row(features, subtask, context), layers);
      const auto action = select_action(std::span<const double>(q.data(), static_cast<std::size_t>(q.cols())), mask,
                                        steps < cfg.explore_steps ? 0.0 : eps, rng);
      Transition t;
      t.instance = instance;
      t.subtask = subtask;
      t.context = context;
      t.action = action;
      t.reward = state.apply_action(action);
      t.terminal = state.done();
      ret += t.reward;
      if (!t.terminal) {
        subtask = state.current_subtask();
        context = sim::encode_context(state, pc.layout);
        mask = state.feasible_actions();
        t.next_subtask = subtask;
        t.next_context = context;
        t.mask_next = mask;
      }
      buffer.push(std::move(t));
      if (buffer.size() >= std::max<std::size_t>(cfg.warmup, 1)) {
        for (std::size_t u = 0; u < cfg.updates_per_step; ++u) {
          const auto batch = buffer.sample(cfg.batch_size, rng);
          loss_sum += agent.train_step(batch, rng);
          ++loss_count;
        }
      }
      if (++steps % cfg.k_copy == 0) agent.sync_target();
    }
    result.log.push_back({ep, ret, state.max_eft(), eps, loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0});
  }
  result.params = std::move(agent.predict());
  return result;
}

sim::ScheduleResult greedy_schedule(const nn::ParamSet& params, const PolicyConfig& cfg,
                                    std::shared_ptr<const sim::ProblemInstance> instance) {
  const auto features = feature_table(params, cfg, *instance, nullptr, gat::Sampling::full);
  const auto layers = cfg.hidden.size() + 1;
  sim::ScheduleState state(std::move(instance));
  while (!state.done()) {
    const auto mask = state.feasible_actions();
    const auto q =
        q_values(params, state_row(features, state.current_subtask(), sim::encode_context(state, cfg.layout)), layers);
    state.apply_action(masked_argmax(std::span<const double>(q.data(), static_cast<std::size_t>(q.cols())), mask));
  }
  return state.result();
}

void save_policy(const std::filesystem::path& path, const nn::ParamSet& params, const PolicyConfig& cfg) {
  nn::save_checkpoint(path, params, {{"policy", to_json(cfg)}});
}

nn::ParamSet load_policy(const std::filesystem::path& path, PolicyConfig& cfg) {
  nlohmann::json meta;
  auto params = nn::load_checkpoint(path, &meta);
  if (!meta.contains("policy")) throw std::runtime_error("checkpoint has no policy metadata: " + path.string());
  cfg = policy_config_from_json(meta.at("policy"));
  return params;
}

}  // namespace vcsched::ddqn
