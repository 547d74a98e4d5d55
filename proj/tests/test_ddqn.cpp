#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <optional>

#include "test_util.hpp"
#include "vcsched/ddqn.hpp"

using namespace vcsched;
using namespace vcsched::ddqn;

namespace {

PolicyConfig small_policy(FeatureSource features = FeatureSource::gat) {
  PolicyConfig p;
  p.features = features;
  p.gat.heads = 2;
  p.gat.dims = {gat::kRawDim, 4, 4};
  p.gat.sample_size = 2;
  p.layout.max_subtasks = 8;
  p.layout.max_vehicles = 4;
  p.hidden = {6};
  p.sync();
  return p;
}

TrainConfig small_train(FeatureSource features = FeatureSource::gat) {
  TrainConfig c;
  c.policy = small_policy(features);
  c.batch_size = 4;
  c.warmup = 4;
  c.explore_steps = 5;
  c.episodes = 3;
  c.sampling = gat::Sampling::full;
  return c;
}

// Transitions of one episode that always picks the lowest feasible vehicle.
std::vector<Transition> walk(const std::shared_ptr<const sim::ProblemInstance>& inst, const sim::StateLayout& layout) {
  std::vector<Transition> out;
  sim::ScheduleState s(inst);
  while (!s.done()) {
    Transition t;
    t.instance = inst;
    t.subtask = s.current_subtask();
    t.context = sim::encode_context(s, layout);
    const auto mask = s.feasible_actions();
    t.action = static_cast<VehicleIdx>(std::find(mask.begin(), mask.end(), true) - mask.begin());
    t.reward = s.apply_action(t.action);
    t.terminal = s.done();
    if (!t.terminal) {
      t.next_subtask = s.current_subtask();
      t.next_context = sim::encode_context(s, layout);
      t.mask_next = s.feasible_actions();
    }
    out.push_back(std::move(t));
  }
  return out;
}

nn::Tensor row_of(const nn::Tensor& features, dag::SubtaskId i, const std::vector<double>& context) {
  nn::Tensor x(1, features.cols() + static_cast<Eigen::Index>(context.size()));
  for (Eigen::Index c = 0; c < features.cols(); ++c) x(0, c) = features(static_cast<Eigen::Index>(i), c);
  for (std::size_t k = 0; k < context.size(); ++k) x(0, features.cols() + static_cast<Eigen::Index>(k)) = context[k];
  return x;
}

double loss_value(Agent& agent, std::span<const Transition* const> batch) {
  auto rng = make_rng({0});
  nn::Tape tape;
  return tape.value(agent.loss(tape, batch, rng))(0, 0);
}

}  // namespace

TEST(Actions, SingleFeasibleActionIsForced) {
  auto rng = make_rng({1});
  const std::vector<double> q{5.0, 1.0, 9.0};
  for (double eps : {0.0, 0.5, 1.0}) EXPECT_EQ(select_action(q, {false, true, false}, eps, rng), 1u);
  EXPECT_THROW(select_action(q, {false, false, false}, 1.0, rng), std::invalid_argument);
}

TEST(Actions, GreedyIgnoresMaskedEntries) {
  auto rng = make_rng({2});
  const std::vector<double> q{5.0, 1.0, 9.0, 7.0};
  EXPECT_EQ(select_action(q, {true, true, false, true}, 1.0, rng), 3u);
  EXPECT_EQ(masked_argmax(std::vector<double>{2.0, 2.0}, {true, true}), 0u);
  const auto m = masked_q(q, {true, false});
  EXPECT_EQ(m[0], 5.0);
  EXPECT_EQ(m[1], kMaskedQ);
  EXPECT_EQ(m[3], kMaskedQ);
}

TEST(Actions, ExplorationIsUniformOverFeasible) {
  auto rng = make_rng({3});
  const std::vector<double> q{0.0, 100.0, 0.0, 0.0};
  const std::vector<bool> mask{true, true, false, true};
  std::vector<int> hits(4, 0);
  const int n = 30000;
  for (int k = 0; k < n; ++k) ++hits[select_action(q, mask, 0.0, rng)];
  EXPECT_EQ(hits[2], 0);
  for (int m : {0, 1, 3}) EXPECT_NEAR(hits[m] / static_cast<double>(n), 1.0 / 3.0, 0.02);
}

TEST(Targets, HandEvaluated) {
  const std::vector<double> qp{1.0, 5.0, 3.0}, qt{10.0, 2.0, 7.0};
  EXPECT_DOUBLE_EQ(ddqn_target(-1.0, false, qp, qt, {true, true, true}, 0.9), -1.0 + 0.9 * 2.0);
  EXPECT_DOUBLE_EQ(dqn_target(-1.0, false, qt, {true, true, true}, 0.9), -1.0 + 0.9 * 10.0);
  EXPECT_DOUBLE_EQ(ddqn_target(-1.0, false, qp, qt, {true, false, true}, 0.9), -1.0 + 0.9 * 7.0);
  EXPECT_EQ(ddqn_target(-2.5, true, qp, qt, {}, 0.9), -2.5);
  EXPECT_EQ(dqn_target(-2.5, true, qt, {}, 0.9), -2.5);
}

TEST(Targets, DoubleNeverExceedsSingleAndAgreesWhenNetworksMatch) {
  auto rng = make_rng({4});
  for (int k = 0; k < 500; ++k) {
    std::vector<double> qp(5), qt(5);
    std::vector<bool> mask(5);
    for (std::size_t m = 0; m < 5; ++m) {
      qp[m] = uniform(rng, -3.0, 3.0);
      qt[m] = uniform(rng, -3.0, 3.0);
      mask[m] = uniform(rng, 0.0, 1.0) < 0.6;
    }
    mask[k % 5] = true;
    const double r = uniform(rng, -2.0, 0.0);
    EXPECT_LE(ddqn_target(r, false, qp, qt, mask, 0.9), dqn_target(r, false, qt, mask, 0.9) + 1e-15);
    EXPECT_EQ(ddqn_target(r, false, qt, qt, mask, 0.9), dqn_target(r, false, qt, mask, 0.9));
  }
}

TEST(Replay, OldestIsEvictedFirst) {
  ReplayBuffer buf(3);
  for (int k = 0; k < 5; ++k) {
    Transition t;
    t.reward = k;
    buf.push(t);
  }
  ASSERT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.at(0).reward, 2.0);
  EXPECT_EQ(buf.at(2).reward, 4.0);
  auto rng = make_rng({5});
  for (const auto* t : buf.sample(50, rng)) EXPECT_GE(t->reward, 2.0);
  EXPECT_THROW(ReplayBuffer(0), std::invalid_argument);
  EXPECT_THROW(ReplayBuffer(2).sample(1, rng), std::logic_error);
}

TEST(Loss, SingleTerminalTransitionIsHalfSquaredError) {
  auto cfg = small_train(FeatureSource::raw);
  Agent agent(cfg, 7);
  const auto inst = vcsched::testing::tiny_instance(7, 4, 3);
  const auto ts = walk(inst, cfg.policy.layout);
  const auto& last = ts.back();
  ASSERT_TRUE(last.terminal);
  const auto q = q_values(agent.predict(), row_of(gat::raw_feature_matrix(inst->task), last.subtask, last.context), 2);
  const double y = cfg.reward_scale * last.reward;
  const Transition* batch[] = {&last};
  EXPECT_NEAR(loss_value(agent, batch), 0.5 * std::pow(y - q(0, last.action), 2), 1e-12);
}

TEST(Loss, NonTerminalTargetUsesBothNetworks) {
  auto cfg = small_train(FeatureSource::raw);
  Agent agent(cfg, 8);
  for (const auto& name : agent.target().names()) agent.target().value(name) *= 0.5;
  const auto inst = vcsched::testing::tiny_instance(8, 4, 3);
  const auto feats = gat::raw_feature_matrix(inst->task);
  const auto t = walk(inst, cfg.policy.layout).front();
  ASSERT_FALSE(t.terminal);
  const auto qp = q_values(agent.predict(), row_of(feats, t.next_subtask, t.next_context), 2);
  const auto qt = q_values(agent.target(), row_of(feats, t.next_subtask, t.next_context), 2);
  std::optional<std::size_t> best;
  for (std::size_t m = 0; m < t.mask_next.size(); ++m) {
    if (t.mask_next[m] && (!best || qp(0, m) > qp(0, *best))) best = m;
  }
  const double y = cfg.reward_scale * t.reward + cfg.gamma * qt(0, *best);
  const double q = q_values(agent.predict(), row_of(feats, t.subtask, t.context), 2)(0, t.action);
  const Transition* batch[] = {&t};
  EXPECT_NEAR(loss_value(agent, batch), 0.5 * (y - q) * (y - q), 1e-12);
}

TEST(Loss, ZeroAtFixedPoint) {
  auto cfg = small_train(FeatureSource::raw);
  Agent agent(cfg, 9);
  const auto inst = vcsched::testing::tiny_instance(9, 4, 3);
  auto t = walk(inst, cfg.policy.layout).back();
  const double q = q_values(agent.predict(), row_of(gat::raw_feature_matrix(inst->task), t.subtask, t.context), 2)(0, t.action);
  t.reward = q / cfg.reward_scale;
  const Transition* batch[] = {&t};
  auto rng = make_rng({0});
  nn::Tape tape;
  agent.predict().zero_grad();
  const auto l = agent.loss(tape, batch, rng);
  EXPECT_NEAR(tape.value(l)(0, 0), 0.0, 1e-20);
  tape.backward(l);
  for (const auto& name : agent.predict().names()) EXPECT_LT(agent.predict().grad(name).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Loss, GatGradientMatchesFiniteDifferences) {
  auto cfg = small_train();
  Agent agent(cfg, 10);
  const auto inst = vcsched::testing::tiny_instance(10, 5, 3);
  const auto ts = walk(inst, cfg.policy.layout);
  // Terminal targets do not depend on the parameters.
  std::vector<Transition> terminal;
  for (auto t : ts) {
    t.terminal = true;
    terminal.push_back(t);
  }
  std::vector<const Transition*> batch;
  for (const auto& t : terminal) batch.push_back(&t);
  auto rng = make_rng({0});
  nn::Tape tape;
  agent.predict().zero_grad();
  tape.backward(agent.loss(tape, batch, rng));
  for (const auto& name : {gat::weight_name(1, 1), gat::attention_name(2, 2), std::string("q/W1")}) {
    const auto numeric = nn::finite_difference(agent.predict(), name, [&] { return loss_value(agent, batch); });
    EXPECT_LT(nn::max_relative_error(agent.predict().grad(name), numeric), 1e-6) << name;
  }
}

TEST(Train, ZeroEpisodesReturnsInitialParameters) {
  auto cfg = small_train();
  cfg.episodes = 0;
  const auto inst = vcsched::testing::tiny_instance(11);
  const auto r = train([&](std::size_t, Rng&) { return inst; }, cfg, 11);
  EXPECT_TRUE(r.params == init_policy(cfg.policy, 11));
  EXPECT_TRUE(r.log.empty());
}

TEST(Train, SeededRunsAreIdenticalAndReturnsTelescope) {
  auto cfg = small_train();
  cfg.sampling = gat::Sampling::ranked;
  cfg.episodes = 4;
  auto source = [](std::size_t ep, Rng&) { return vcsched::testing::tiny_instance(100 + ep, 5, 3); };
  const auto a = train(source, cfg, 12), b = train(source, cfg, 12);
  EXPECT_TRUE(a.params == b.params);
  ASSERT_EQ(a.log.size(), 4u);
  for (std::size_t k = 0; k < a.log.size(); ++k) {
    EXPECT_EQ(a.log[k].makespan, b.log[k].makespan);
    EXPECT_NEAR(a.log[k].episode_return, -a.log[k].makespan, 1e-9);
    EXPECT_DOUBLE_EQ(a.log[k].epsilon, cfg.epsilon_at(k));
  }
  EXPECT_DOUBLE_EQ(cfg.epsilon_at(3), cfg.epsilon_final);
  EXPECT_FALSE(a.params == init_policy(cfg.policy, 12));
}

TEST(Train, ConfigValidation) {
  auto cfg = small_train();
  cfg.gamma = 0.0;
  EXPECT_THROW(cfg.check(), std::invalid_argument);
  cfg = small_train();
  cfg.policy.layout.feature_dim = 99;
  EXPECT_THROW(cfg.check(), std::invalid_argument);
}

TEST(Policy, SaveLoadPreservesGreedySchedule) {
  auto cfg = small_train();
  const auto inst = vcsched::testing::tiny_instance(13, 5, 3);
  const auto r = train([&](std::size_t, Rng&) { return inst; }, cfg, 13);
  const auto dir = vcsched::testing::scratch_dir("policy");
  save_policy(dir / "p.json", r.params, cfg.policy);
  PolicyConfig loaded;
  const auto params = load_policy(dir / "p.json", loaded);
  EXPECT_TRUE(params == r.params);
  EXPECT_EQ(to_json(loaded), to_json(cfg.policy));
  const auto s1 = greedy_schedule(r.params, cfg.policy, inst);
  const auto s2 = greedy_schedule(params, loaded, inst);
  EXPECT_EQ(s1.assignment, s2.assignment);
  EXPECT_TRUE(s1.feasible);
}
