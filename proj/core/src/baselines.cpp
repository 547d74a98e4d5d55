#include "vcsched/baselines.hpp"

#include <algorithm>
#include <stdexcept>

#include "vcsched/rng.hpp"

namespace vcsched::baselines {

sim::ScheduleResult lps(Instance instance) {
  const std::vector<mobility::VehicleIdx> all_owner(instance->task.size(), mobility::kOwner);
  return sim::simulate_assignment(std::move(instance), all_owner, false);
}

sim::ScheduleResult heft(Instance instance) {
  sim::ScheduleState state(std::move(instance));
  const auto n = state.instance().fleet.size();
  while (!state.done()) {
    const auto i = state.current_subtask();
    mobility::VehicleIdx best = mobility::kOwner;
    double best_eft = state.candidate(i, best).eft;
    for (mobility::VehicleIdx m = 1; m < n; ++m) {
      const double eft = state.candidate(i, m).eft;
      if (eft < best_eft) {
        best = m;
        best_eft = eft;
      }
    }
    state.apply_action(state.admits(i, best) ? best : mobility::kOwner);
  }
  return state.result();
}

void GaConfig::check() const {
  if (population < 2) throw std::invalid_argument("mga: population must be at least 2");
  if (crossover < 0.0 || crossover > 1.0 || mutation < 0.0 || mutation > 1.0) {
    throw std::invalid_argument("mga: rates must lie in [0, 1]");
  }
  if (tournament < 1) throw std::invalid_argument("mga: tournament size must be at least 1");
}

sim::ScheduleResult mga(Instance instance, const GaConfig& cfg) {
  cfg.check();
  using Chromosome = std::vector<mobility::VehicleIdx>;
  const auto genes = instance->task.size();
  const auto vehicles = instance->fleet.size();
  auto rng = make_rng({cfg.seed, 0x96a});
  std::uniform_int_distribution<mobility::VehicleIdx> any_vehicle(0, vehicles - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  struct Individual {
    Chromosome genes;
    sim::ScheduleResult result;
  };
  auto evaluate = [&](Chromosome c) {
    auto r = sim::simulate_assignment(instance, c, true);
    return Individual{std::move(c), std::move(r)};
  };

  std::vector<Individual> pop;
  pop.reserve(cfg.population);
  pop.push_back(evaluate(Chromosome(genes, mobility::kOwner)));
  while (pop.size() < cfg.population) {
    Chromosome c(genes, mobility::kOwner);
    if (!cfg.all_owner_init) {
      for (std::size_t g = 1; g < genes; ++g) c[g] = any_vehicle(rng);
    }
    pop.push_back(evaluate(std::move(c)));
  }
  auto better = [](const Individual& a, const Individual& b) { return a.result.makespan < b.result.makespan; };
  auto best_of = [&] { return *std::min_element(pop.begin(), pop.end(), better); };
  std::uniform_int_distribution<std::size_t> any_member(0, cfg.population - 1);
  auto select = [&]() -> const Individual& {
    std::size_t pick = any_member(rng);
    for (std::size_t k = 1; k < cfg.tournament; ++k) {
      const auto other = any_member(rng);
      if (pop[other].result.makespan < pop[pick].result.makespan) pick = other;
    }
    return pop[pick];
  };

  for (std::size_t gen = 0; gen < cfg.generations; ++gen) {
    std::vector<Individual> next;
    next.reserve(cfg.population);
    next.push_back(best_of());
    while (next.size() < cfg.population) {
      Chromosome a = select().genes;
      Chromosome b = select().genes;
      // Gene 0 is the virtual source; cut points fall between real genes.
      if (genes > 2 && unit(rng) < cfg.crossover) {
        const auto cut = std::uniform_int_distribution<std::size_t>(2, genes - 1)(rng);
        std::swap_ranges(a.begin() + static_cast<std::ptrdiff_t>(cut), a.end(),
                         b.begin() + static_cast<std::ptrdiff_t>(cut));
      }
      for (auto* c : {&a, &b}) {
        for (std::size_t g = 1; g < genes; ++g) {
          if (unit(rng) < cfg.mutation) (*c)[g] = any_vehicle(rng);
        }
      }
      next.push_back(evaluate(std::move(a)));
      if (next.size() < cfg.population) next.push_back(evaluate(std::move(b)));
    }
    pop = std::move(next);
  }
  return best_of().result;
}

ddqn::TrainResult drlosm_train(const ddqn::InstanceSource& source, ddqn::TrainConfig cfg, std::uint64_t seed) {
  cfg.policy.features = ddqn::FeatureSource::raw;
  cfg.policy.sync();
  return ddqn::train(source, cfg, seed);
}

sim::ScheduleResult drlosm(const LearnedPolicy& policy, Instance instance) {
  if (policy.config.features != ddqn::FeatureSource::raw) throw std::invalid_argument("drlosm needs a raw-feature policy");
  return ddqn::greedy_schedule(policy.params, policy.config, std::move(instance));
}

const std::vector<std::string>& scheduler_names() {
  static const std::vector<std::string> names{"lps", "heft", "mga", "drlosm", "gadrl", "oracle"};
  return names;
}

bool is_registered(const std::string& name) {
  const auto& names = scheduler_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

bool is_learned(const std::string& name) { return name == "gadrl" || name == "drlosm"; }

Scheduler make_scheduler(const std::string& name, const SchedulerSettings& settings) {
  if (name == "lps") return [](Instance inst, std::uint64_t) { return lps(std::move(inst)); };
  if (name == "heft") return [](Instance inst, std::uint64_t) { return heft(std::move(inst)); };
  if (name == "oracle") return [](Instance inst, std::uint64_t) { return sim::brute_force_optimal(std::move(inst)); };
  if (name == "mga") {
    return [ga = settings.ga](Instance inst, std::uint64_t seed) {
      auto cfg = ga;
      cfg.seed = seed;
      return mga(std::move(inst), cfg);
    };
  }
  if (name == "drlosm" || name == "gadrl") {
    const auto policy = name == "gadrl" ? settings.gadrl : settings.drlosm;
    if (!policy) throw std::invalid_argument("scheduler " + name + " needs a trained policy");
    const auto expected = name == "gadrl" ? ddqn::FeatureSource::gat : ddqn::FeatureSource::raw;
    if (policy->config.features != expected) throw std::invalid_argument("policy feature source does not match " + name);
    return [policy](Instance inst, std::uint64_t) {
      return ddqn::greedy_schedule(policy->params, policy->config, std::move(inst));
    };
  }
  throw std::invalid_argument("unknown scheduler: " + name);
}

}  // namespace vcsched::baselines
