#include <benchmark/benchmark.h>

#include "vcsched/baselines.hpp"
#include "vcsched/ddqn.hpp"
#include "vcsched/gat.hpp"

using namespace vcsched;

namespace {

std::shared_ptr<const sim::ProblemInstance> instance(std::size_t subtasks, std::size_t vehicles) {
  return sim::make_instance(dag::generate_random(subtasks, 5, 42), mobility::build_fleet(vehicles, 42));
}

}  // namespace

static void BM_EstEft(benchmark::State& state) {
  const auto inst = instance(20, static_cast<std::size_t>(state.range(0)));
  sim::ScheduleState s(inst);
  const auto i = s.current_subtask();
  for (auto _ : state) {
    for (mobility::VehicleIdx m = 0; m < inst->fleet.size(); ++m) benchmark::DoNotOptimize(s.candidate(i, m));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(inst->fleet.size()));
}
BENCHMARK(BM_EstEft)->Arg(5)->Arg(20);

static void BM_Ranks(benchmark::State& state) {
  const auto task = dag::generate_random(static_cast<std::size_t>(state.range(0)), 5, 7);
  const auto fleet = mobility::build_fleet(10, 7);
  for (auto _ : state) benchmark::DoNotOptimize(dag::compute_ranks(task, fleet, {}));
}
BENCHMARK(BM_Ranks)->Arg(20)->Arg(50);

static void BM_GatForward(benchmark::State& state) {
  const auto inst = instance(static_cast<std::size_t>(state.range(0)), 10);
  gat::GatConfig cfg;
  nn::ParamSet p;
  auto rng = make_rng({1});
  gat::init_params(p, cfg, rng);
  for (auto _ : state) {
    const auto samples = gat::sample_all(inst->task, inst->ranks, cfg, rng, gat::Sampling::ranked);
    benchmark::DoNotOptimize(gat::forward_values(p, inst->task, samples, cfg));
  }
}
BENCHMARK(BM_GatForward)->Arg(20)->Arg(41);

static void BM_TrainStep(benchmark::State& state) {
  ddqn::TrainConfig cfg;
  cfg.policy.features = state.range(0) ? ddqn::FeatureSource::gat : ddqn::FeatureSource::raw;
  cfg.policy.sync();
  ddqn::Agent agent(cfg, 1);
  ddqn::ReplayBuffer buffer(1000);
  for (std::uint64_t k = 0; k < 8; ++k) {
    const auto inst = sim::make_instance(dag::generate_random(20, 5, k), mobility::build_fleet(10, k));
    sim::ScheduleState s(inst);
    while (!s.done()) {
      ddqn::Transition t;
      t.instance = inst;
      t.subtask = s.current_subtask();
      t.context = sim::encode_context(s, cfg.policy.layout);
      t.action = 0;
      t.reward = s.apply_action(0);
      t.terminal = s.done();
      if (!t.terminal) {
        t.next_subtask = s.current_subtask();
        t.next_context = sim::encode_context(s, cfg.policy.layout);
        t.mask_next = s.feasible_actions();
      }
      buffer.push(std::move(t));
    }
  }
  auto rng = make_rng({2});
  for (auto _ : state) {
    const auto batch = buffer.sample(cfg.batch_size, rng);
    benchmark::DoNotOptimize(agent.train_step(batch, rng));
  }
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_GreedySchedule(benchmark::State& state) {
  const auto inst = instance(20, 10);
  ddqn::PolicyConfig cfg;
  const auto params = ddqn::init_policy(cfg, 1);
  for (auto _ : state) benchmark::DoNotOptimize(ddqn::greedy_schedule(params, cfg, inst).makespan);
}
BENCHMARK(BM_GreedySchedule)->Unit(benchmark::kMillisecond);

static void BM_Heft(benchmark::State& state) {
  const auto inst = instance(static_cast<std::size_t>(state.range(0)), 10);
  for (auto _ : state) benchmark::DoNotOptimize(baselines::heft(inst).makespan);
}
BENCHMARK(BM_Heft)->Arg(20)->Arg(50);

static void BM_Mga(benchmark::State& state) {
  const auto inst = instance(20, 10);
  baselines::GaConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(baselines::mga(inst, cfg).makespan);
}
BENCHMARK(BM_Mga)->Unit(benchmark::kMillisecond);

static void BM_Oracle(benchmark::State& state) {
  const auto inst = sim::make_instance(dag::generate_random(7, 3, 5), mobility::build_fleet(4, 5));
  for (auto _ : state) benchmark::DoNotOptimize(sim::brute_force_optimal(inst).makespan);
}
BENCHMARK(BM_Oracle)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
