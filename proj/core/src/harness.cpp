#include "vcsched/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <toml.hpp>

namespace vcsched::harness {
namespace {

constexpr std::uint64_t kHeldOutOffset = 1'000'000;

/// One TOML table; every key read is recorded so leftovers can be reported.
class Section {
 public:
  Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

  template <class T>
  void get(std::string_view key, T& out) {
    seen_.insert(std::string(key));
    if (!table_) return;
    const auto node = (*table_)[key];
    if (!node) return;
    read(node, key, out);
  }

  void finish() const {
    if (!table_) return;
    for (auto&& [k, v] : *table_) {
      if (!seen_.contains(std::string(k.str()))) {
        throw std::invalid_argument(fmt::format("config: unknown key [{}].{}", name_, k.str()));
      }
    }
  }

 private:
  [[noreturn]] void fail(std::string_view key, std::string_view want) const {
    throw std::invalid_argument(fmt::format("config: [{}].{} must be {}", name_, key, want));
  }

  void read(toml::node_view<const toml::node> node, std::string_view key, double& out) const {
    const auto v = node.value<double>();
    if (!v) fail(key, "a number");
    out = *v;
  }
  void read(toml::node_view<const toml::node> node, std::string_view key, bool& out) const {
    const auto v = node.value_exact<bool>();
    if (!v) fail(key, "a boolean");
    out = *v;
  }
  // std::size_t and std::uint64_t are the same type on the supported targets.
  void read(toml::node_view<const toml::node> node, std::string_view key, std::uint64_t& out) const {
    const auto v = node.value_exact<std::int64_t>();
    if (!v || *v < 0) fail(key, "a non-negative integer");
    out = static_cast<std::uint64_t>(*v);
  }
  void read(toml::node_view<const toml::node> node, std::string_view key, std::int64_t& out) const {
    const auto v = node.value_exact<std::int64_t>();
    if (!v) fail(key, "an integer");
    out = *v;
  }
  void read(toml::node_view<const toml::node> node, std::string_view key, std::string& out) const {
    const auto v = node.value_exact<std::string>();
    if (!v) fail(key, "a string");
    out = *v;
  }
  void read(toml::node_view<const toml::node> node, std::string_view key, std::filesystem::path& out) const {
    std::string s;
    read(node, key, s);
    out = s;
  }
  void read(toml::node_view<const toml::node> node, std::string_view key, std::vector<std::string>& out) const {
    const auto* arr = node.as_array();
    if (!arr) fail(key, "an array of strings");
    out.clear();
    for (const auto& e : *arr) {
      const auto v = e.value_exact<std::string>();
      if (!v) fail(key, "an array of strings");
      out.push_back(*v);
    }
  }
  void read(toml::node_view<const toml::node> node, std::string_view key, std::vector<std::size_t>& out) const {
    const auto* arr = node.as_array();
    if (!arr) fail(key, "an array of non-negative integers");
    out.clear();
    for (const auto& e : *arr) {
      const auto v = e.value_exact<std::int64_t>();
      if (!v || *v < 0) fail(key, "an array of non-negative integers");
      out.push_back(static_cast<std::size_t>(*v));
    }
  }
  void read(toml::node_view<const toml::node> node, std::string_view key, std::vector<double>& out) const {
    const auto* arr = node.as_array();
    if (!arr) fail(key, "an array of numbers");
    out.clear();
    for (const auto& e : *arr) {
      const auto v = e.value<double>();
      if (!v) fail(key, "an array of numbers");
      out.push_back(*v);
    }
  }

  const toml::table* table_;
  std::string name_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

gat::Sampling parse_sampling(const std::string& s) {
  if (s == "ranked") return gat::Sampling::ranked;
  if (s == "inverted") return gat::Sampling::inverted;
  if (s == "full") return gat::Sampling::full;
  throw std::invalid_argument("config: unknown sampling mode " + s);
}

std::string sampling_name(gat::Sampling s) {
  switch (s) {
    case gat::Sampling::ranked: return "ranked";
    case gat::Sampling::inverted: return "inverted";
    case gat::Sampling::full: return "full";
  }
  return "ranked";
}

std::string fmt_num(double v) { return fmt::format("{}", v); }

nlohmann::json train_key(const ExperimentConfig& cfg, const std::string& name,
                         const std::vector<std::size_t>& vehicle_counts) {
  const auto& t = cfg.train.config;
  const auto& g = cfg.dag.generator;
  const auto& m = cfg.fleet.mobility;
  return {
      {"scheduler", name},
      {"policy", ddqn::to_json(t.policy)},
      {"train",
       {t.lr, t.gamma, t.epsilon, t.epsilon_final, t.k_copy, t.batch_size, t.buffer_capacity, t.episodes, t.warmup,
        t.explore_steps, t.updates_per_step, t.reward_scale, t.double_q, sampling_name(t.sampling), cfg.train.seed}},
      {"dag",
       {cfg.dag.subtasks, cfg.dag.layers, cfg.dag.file.string(), cfg.dag.fixture, g.workload_min_gcycles,
        g.workload_max_gcycles, g.edge_min_kb, g.edge_max_kb, g.max_parents}},
      {"fleet",
       {cfg.fleet.vehicles, cfg.fleet.file.string(), cfg.fleet.trace.string(), m.mu_g, m.sigma_g, m.g_min, m.g_max,
        m.coverage_d, m.slot_length, m.region.x_min, m.region.y_min, m.region.x_max, m.region.y_max, m.arrival_min,
        m.arrival_max, m.horizon_slots, cfg.fleet.capability.min_ghz, cfg.fleet.capability.max_ghz}},
      {"channel",
       {cfg.channel.fc_ghz, cfg.channel.sigma_delta_db, cfg.channel.sigma_beta_db, cfg.channel.psi_a,
        cfg.channel.psi_b, cfg.channel.mode == channel::ChannelMode::stochastic, cfg.channel.seed}},
      {"base_seed", cfg.base_seed},
      {"vehicle_counts", vehicle_counts},
  };
}

std::size_t worker_count(std::size_t requested, std::size_t jobs) {
  std::size_t n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, jobs));
}

dag::DagTask base_task(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (!cfg.dag.file.empty()) return dag::load_dag(cfg.dag.file);
  if (!cfg.dag.fixture.empty()) return dag::molecular_dynamics_fixture();
  return dag::generate_random(cfg.dag.subtasks, cfg.dag.layers, seed, cfg.dag.generator);
}

mobility::Fleet base_fleet(const ExperimentConfig& cfg, std::size_t vehicles, std::uint64_t seed) {
  if (!cfg.fleet.file.empty()) return mobility::load_fleet(cfg.fleet.file);
  if (!cfg.fleet.trace.empty()) {
    mobility::TraceOptions opt;
    opt.capability_seed = seed;
    opt.f_range = cfg.fleet.capability;
    return mobility::ingest_trace(cfg.fleet.trace, cfg.fleet.mobility, opt);
  }
  return mobility::build_fleet(vehicles, seed, cfg.fleet.mobility, cfg.fleet.capability);
}

channel::ChannelParams run_channel(const ExperimentConfig& cfg, std::uint64_t seed) {
  auto ch = cfg.channel;
  ch.seed = cfg.channel.seed + seed;
  return ch;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void ExperimentConfig::check() const {
  if (schedulers.empty()) throw std::invalid_argument("config: no schedulers");
  for (const auto& s : schedulers) {
    if (!baselines::is_registered(s)) throw std::invalid_argument("config: unregistered scheduler " + s);
  }
  if (monte_carlo_runs < 1) throw std::invalid_argument("config: monte_carlo_runs must be at least 1");
  if (!dag.fixture.empty() && dag.fixture != "molecular_dynamics") {
    throw std::invalid_argument("config: unknown dag fixture " + dag.fixture);
  }
  if (dag.file.empty() && dag.fixture.empty() && (dag.layers == 0 || dag.subtasks < dag.layers)) {
    throw std::invalid_argument("config: dag needs 1 <= layers <= subtasks");
  }
  if (fleet.file.empty() && fleet.trace.empty() && fleet.vehicles == 0) {
    throw std::invalid_argument("config: fleet needs at least one vehicle");
  }
  if (!fleet.file.empty() && !fleet.trace.empty()) throw std::invalid_argument("config: fleet file and trace are exclusive");
  if (!dag.file.empty() && !dag.fixture.empty()) throw std::invalid_argument("config: dag file and fixture are exclusive");
  fleet.mobility.check();
  channel.check();
  mga.check();
  train.config.check();
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  toml::table doc;
  try {
    doc = toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw std::invalid_argument(
        fmt::format("config: line {}: {}", e.source().begin.line, std::string(e.description())));
  }
  static const std::set<std::string> known{"experiment", "dag", "fleet", "channel", "train", "mga"};
  for (auto&& [k, v] : doc) {
    if (!known.contains(std::string(k.str()))) throw std::invalid_argument(fmt::format("config: unknown section [{}]", k.str()));
    if (!v.is_table()) throw std::invalid_argument(fmt::format("config: [{}] must be a table", k.str()));
  }
  auto section = [&](const char* name) { return Section(doc[name].as_table(), name); };

  ExperimentConfig cfg;
  {
    auto s = section("experiment");
    s.get("schedulers", cfg.schedulers);
    s.get("monte_carlo_runs", cfg.monte_carlo_runs);
    s.get("base_seed", cfg.base_seed);
    s.get("output_dir", cfg.output_dir);
    s.get("threads", cfg.threads);
    s.finish();
    cfg.output_dir = resolve(cfg.output_dir, base_dir);
  }
  {
    auto s = section("dag");
    auto& g = cfg.dag.generator;
    s.get("subtasks", cfg.dag.subtasks);
    s.get("layers", cfg.dag.layers);
    s.get("file", cfg.dag.file);
    s.get("fixture", cfg.dag.fixture);
    s.get("workload_min_gcycles", g.workload_min_gcycles);
    s.get("workload_max_gcycles", g.workload_max_gcycles);
    s.get("edge_min_kb", g.edge_min_kb);
    s.get("edge_max_kb", g.edge_max_kb);
    s.get("max_parents", g.max_parents);
    s.finish();
    cfg.dag.file = resolve(cfg.dag.file, base_dir);
  }
  {
    auto s = section("fleet");
    auto& m = cfg.fleet.mobility;
    std::vector<double> region{m.region.x_min, m.region.y_min, m.region.x_max, m.region.y_max};
    s.get("vehicles", cfg.fleet.vehicles);
    s.get("file", cfg.fleet.file);
    s.get("trace", cfg.fleet.trace);
    s.get("mu_g", m.mu_g);
    s.get("sigma_g", m.sigma_g);
    s.get("g_min", m.g_min);
    s.get("g_max", m.g_max);
    s.get("coverage_d", m.coverage_d);
    s.get("slot_length", m.slot_length);
    s.get("arrival_min", m.arrival_min);
    s.get("arrival_max", m.arrival_max);
    s.get("horizon_slots", m.horizon_slots);
    s.get("region", region);
    s.get("f_min_ghz", cfg.fleet.capability.min_ghz);
    s.get("f_max_ghz", cfg.fleet.capability.max_ghz);
    s.finish();
    if (region.size() != 4) throw std::invalid_argument("config: [fleet].region must be [x_min, y_min, x_max, y_max]");
    m.region = {region[0], region[1], region[2], region[3]};
    cfg.fleet.file = resolve(cfg.fleet.file, base_dir);
    cfg.fleet.trace = resolve(cfg.fleet.trace, base_dir);
  }
  {
    auto s = section("channel");
    auto& c = cfg.channel;
    std::string mode = "deterministic";
    s.get("fc_ghz", c.fc_ghz);
    s.get("sigma_delta_db", c.sigma_delta_db);
    s.get("sigma_beta_db", c.sigma_beta_db);
    s.get("psi_a", c.psi_a);
    s.get("psi_b", c.psi_b);
    s.get("mode", mode);
    s.get("seed", c.seed);
    s.finish();
    if (mode == "deterministic") {
      c.mode = channel::ChannelMode::deterministic;
    } else if (mode == "stochastic") {
      c.mode = channel::ChannelMode::stochastic;
    } else {
      throw std::invalid_argument("config: unknown channel mode " + mode);
    }
  }
  {
    auto s = section("train");
    auto& t = cfg.train.config;
    auto& p = t.policy;
    std::string sampling = sampling_name(t.sampling);
    s.get("episodes", t.episodes);
    s.get("lr", t.lr);
    s.get("gamma", t.gamma);
    s.get("epsilon", t.epsilon);
    s.get("epsilon_final", t.epsilon_final);
    s.get("k_copy", t.k_copy);
    s.get("batch_size", t.batch_size);
    s.get("buffer_capacity", t.buffer_capacity);
    s.get("warmup", t.warmup);
    s.get("explore_steps", t.explore_steps);
    s.get("updates_per_step", t.updates_per_step);
    s.get("reward_scale", t.reward_scale);
    s.get("double_q", t.double_q);
    s.get("sampling", sampling);
    s.get("heads", p.gat.heads);
    s.get("gat_dims", p.gat.dims);
    s.get("sample_size", p.gat.sample_size);
    s.get("hidden", p.hidden);
    s.get("max_subtasks", p.layout.max_subtasks);
    s.get("max_vehicles", p.layout.max_vehicles);
    s.get("vehicle_load", p.layout.vehicle_load);
    s.get("seed", cfg.train.seed);
    s.get("checkpoint_dir", cfg.train.checkpoint_dir);
    s.get("gadrl_checkpoint", cfg.train.gadrl_checkpoint);
    s.get("drlosm_checkpoint", cfg.train.drlosm_checkpoint);
    s.finish();
    t.sampling = parse_sampling(sampling);
    p.sync();
    cfg.train.checkpoint_dir = resolve(cfg.train.checkpoint_dir, base_dir);
    cfg.train.gadrl_checkpoint = resolve(cfg.train.gadrl_checkpoint, base_dir);
    cfg.train.drlosm_checkpoint = resolve(cfg.train.drlosm_checkpoint, base_dir);
  }
  {
    auto s = section("mga");
    s.get("population", cfg.mga.population);
    s.get("generations", cfg.mga.generations);
    s.get("crossover", cfg.mga.crossover);
    s.get("mutation", cfg.mga.mutation);
    s.get("tournament", cfg.mga.tournament);
    s.finish();
  }
  cfg.check();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto cfg = parse_config(ss.str(), path.parent_path());
  apply_env_overrides(cfg);
  return cfg;
}

void apply_env_overrides(ExperimentConfig& cfg) {
  const char* env = std::getenv("VCSCHED_SEED");
  if (!env || !*env) return;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(env, &used);
    if (used != std::string_view(env).size()) throw std::invalid_argument("trailing characters");
    cfg.base_seed = v;
  } catch (const std::exception&) {
    throw std::invalid_argument(fmt::format("VCSCHED_SEED is not an unsigned integer: '{}'", env));
  }
}

std::string to_string(Axis axis) {
  switch (axis) {
    case Axis::none: return "none";
    case Axis::vehicles: return "vehicles";
    case Axis::subtasks: return "subtasks";
    case Axis::layers: return "layers";
  }
  return "none";
}

Axis parse_axis(std::string_view name) {
  if (name == "vehicles") return Axis::vehicles;
  if (name == "subtasks") return Axis::subtasks;
  if (name == "layers") return Axis::layers;
  throw std::invalid_argument(fmt::format("unknown sweep axis '{}' (vehicles|subtasks|layers)", name));
}

std::vector<SummaryRow> summarize(const MetricsTable& table, const std::vector<std::string>& scheduler_order) {
  auto rank = [&](const std::string& s) {
    const auto it = std::find(scheduler_order.begin(), scheduler_order.end(), s);
    return static_cast<std::size_t>(it - scheduler_order.begin());
  };
  using Key = std::tuple<std::string, double, std::size_t, std::string>;
  std::map<Key, std::vector<const MetricsRow*>> groups;
  for (const auto& r : table) groups[{r.axis, r.axis_value, rank(r.scheduler), r.scheduler}].push_back(&r);

  std::vector<SummaryRow> out;
  for (const auto& [key, rows] : groups) {
    SummaryRow s;
    s.axis = std::get<0>(key);
    s.axis_value = std::get<1>(key);
    s.scheduler = std::get<3>(key);
    s.runs = rows.size();
    double sum = 0.0, wall = 0.0, ok = 0.0;
    for (const auto* r : rows) {
      sum += r->makespan;
      wall += r->wall_s;
      ok += r->feasible ? 1.0 : 0.0;
    }
    const auto n = static_cast<double>(rows.size());
    s.mean = sum / n;
    s.mean_wall_s = wall / n;
    s.feasible_rate = ok / n;
    if (rows.size() > 1) {
      double ss = 0.0;
      for (const auto* r : rows) ss += (r->makespan - s.mean) * (r->makespan - s.mean);
      s.std = std::sqrt(ss / (n - 1.0));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::shared_ptr<const sim::ProblemInstance> make_run_instance(const ExperimentConfig& cfg, std::size_t run) {
  const std::uint64_t seed = cfg.base_seed + run;
  return sim::make_instance(base_task(cfg, seed), base_fleet(cfg, cfg.fleet.vehicles, seed), run_channel(cfg, seed));
}

ddqn::InstanceSource training_source(const ExperimentConfig& cfg, std::vector<std::size_t> vehicle_counts) {
  const std::uint64_t held = cfg.base_seed + kHeldOutOffset;
  auto task = std::make_shared<const dag::DagTask>(base_task(cfg, held));
  if (vehicle_counts.empty()) vehicle_counts.push_back(cfg.fleet.vehicles);
  return [cfg, task, held, counts = std::move(vehicle_counts)](std::size_t episode, Rng& rng) {
    std::size_t n = counts.front();
    if (counts.size() > 1) n = counts[std::uniform_int_distribution<std::size_t>(0, counts.size() - 1)(rng)];
    const auto seed = held + 1 + episode;
    return sim::make_instance(*task, base_fleet(cfg, n, seed), run_channel(cfg, seed));
  };
}

baselines::SchedulerSettings prepare_schedulers(const ExperimentConfig& cfg, std::vector<std::size_t> vehicle_counts) {
  baselines::SchedulerSettings settings;
  settings.ga = cfg.mga;
  struct Job {
    std::string name;
    std::filesystem::path path;
    bool cached = false;
  };
  std::vector<Job> jobs;
  for (const auto& name : cfg.schedulers) {
    if (!baselines::is_learned(name)) continue;
    const auto& explicit_path = name == "gadrl" ? cfg.train.gadrl_checkpoint : cfg.train.drlosm_checkpoint;
    if (!explicit_path.empty()) {
      if (!std::filesystem::exists(explicit_path)) throw std::runtime_error("checkpoint not found: " + explicit_path.string());
      jobs.push_back({name, explicit_path, true});
      continue;
    }
    const auto key = fnv1a(train_key(cfg, name, vehicle_counts).dump());
    const auto path = cfg.train.checkpoint_dir / fmt::format("{}-{:016x}.json", name, key);
    jobs.push_back({name, path, std::filesystem::exists(path)});
  }

  auto produce = [&](const Job& job) {
    auto policy = std::make_shared<baselines::LearnedPolicy>();
    if (job.cached) {
      policy->params = ddqn::load_policy(job.path, policy->config);
      return policy;
    }
    const auto source = training_source(cfg, vehicle_counts);
    auto result = job.name == "gadrl" ? ddqn::train(source, cfg.train.config, cfg.train.seed)
                                      : baselines::drlosm_train(source, cfg.train.config, cfg.train.seed);
    policy->config = cfg.train.config.policy;
    if (job.name == "drlosm") {
      policy->config.features = ddqn::FeatureSource::raw;
      policy->config.sync();
    }
    policy->params = std::move(result.params);
    std::filesystem::create_directories(job.path.parent_path());
    ddqn::save_policy(job.path, policy->params, policy->config);
    auto log_path = job.path;
    log_path.replace_extension(".log.csv");
    ddqn::write_log_csv(result.log, log_path);
    return policy;
  };

  std::vector<std::future<std::shared_ptr<baselines::LearnedPolicy>>> futures;
  const auto policy = worker_count(cfg.threads, jobs.size()) > 1 ? std::launch::async : std::launch::deferred;
  for (const auto& job : jobs) futures.push_back(std::async(policy, produce, std::cref(job)));
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    auto p = futures[k].get();
    if (jobs[k].name == "gadrl") {
      settings.gadrl = std::move(p);
    } else {
      settings.drlosm = std::move(p);
    }
  }
  return settings;
}

MetricsTable run_experiment(const ExperimentConfig& cfg) {
  cfg.check();
  return run_experiment(cfg, prepare_schedulers(cfg));
}

MetricsTable run_experiment(const ExperimentConfig& cfg, const baselines::SchedulerSettings& settings, Axis axis,
                            double axis_value) {
  cfg.check();
  std::vector<baselines::Scheduler> schedulers;
  for (const auto& name : cfg.schedulers) schedulers.push_back(baselines::make_scheduler(name, settings));

  const auto runs = cfg.monte_carlo_runs;
  std::vector<std::vector<MetricsRow>> per_run(runs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const auto r = next.fetch_add(1);
      if (r >= runs) return;
      try {
        const auto instance = make_run_instance(cfg, r);
        const std::uint64_t seed = cfg.base_seed + r;
        for (std::size_t k = 0; k < schedulers.size(); ++k) {
          const auto t0 = std::chrono::steady_clock::now();
          const auto result = schedulers[k](instance, seed);
          const auto t1 = std::chrono::steady_clock::now();
          const auto report = sim::check_constraints(result, instance->task, instance->fleet);
          MetricsRow row;
          row.axis = to_string(axis);
          row.axis_value = axis_value;
          row.scheduler = cfg.schedulers[k];
          row.run = r;
          row.seed = seed;
          row.subtasks = instance->task.real_count();
          row.layers = instance->task.layer_count();
          row.vehicles = instance->fleet.size();
          row.makespan = result.makespan;
          row.wall_s = std::chrono::duration<double>(t1 - t0).count();
          row.feasible = result.complete && report.ok();
          per_run[r].push_back(std::move(row));
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(runs);
      }
    }
  };

  const auto n_workers = worker_count(cfg.threads, runs);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  MetricsTable table;
  for (auto& rows : per_run) std::move(rows.begin(), rows.end(), std::back_inserter(table));
  return table;
}

MetricsTable sweep(const ExperimentConfig& cfg, Axis axis, const std::vector<std::size_t>& values) {
  if (axis == Axis::none) throw std::invalid_argument("sweep needs an axis");
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  std::vector<ExperimentConfig> points;
  for (const auto v : values) {
    auto c = cfg;
    switch (axis) {
      case Axis::vehicles: c.fleet.vehicles = v; break;
      case Axis::subtasks: c.dag.subtasks = v; break;
      case Axis::layers: c.dag.layers = v; break;
      case Axis::none: break;
    }
    c.check();
    points.push_back(std::move(c));
  }
  const auto settings = prepare_schedulers(cfg, axis == Axis::vehicles ? values : std::vector<std::size_t>{});
  MetricsTable table;
  for (std::size_t k = 0; k < values.size(); ++k) {
    auto rows = run_experiment(points[k], settings, axis, static_cast<double>(values[k]));
    std::move(rows.begin(), rows.end(), std::back_inserter(table));
  }
  return table;
}

std::vector<std::filesystem::path> emit_outputs(const MetricsTable& table, const std::vector<std::string>& scheduler_order,
                                                const std::filesystem::path& dir) {
  if (table.empty()) throw std::invalid_argument("emit_outputs: empty metrics table");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error(fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));

  auto order = scheduler_order;
  for (const auto& r : table) {
    if (std::find(order.begin(), order.end(), r.scheduler) == order.end()) order.push_back(r.scheduler);
  }
  auto rank = [&](const std::string& s) { return std::find(order.begin(), order.end(), s) - order.begin(); };
  std::vector<const MetricsRow*> rows;
  for (const auto& r : table) rows.push_back(&r);
  std::sort(rows.begin(), rows.end(), [&](const MetricsRow* a, const MetricsRow* b) {
    return std::tuple(a->axis, a->axis_value, rank(a->scheduler), a->run) <
           std::tuple(b->axis, b->axis_value, rank(b->scheduler), b->run);
  });

  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& body) {
    write_file(dir / name, body);
    written.push_back(dir / name);
  };

  std::string metrics = "axis,axis_value,scheduler,run,seed,subtasks,layers,vehicles,makespan,feasible\n";
  std::string timing = "axis,axis_value,scheduler,run,wall_s\n";
  for (const auto* r : rows) {
    metrics += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r->axis, fmt_num(r->axis_value), r->scheduler, r->run,
                           r->seed, r->subtasks, r->layers, r->vehicles, fmt_num(r->makespan), r->feasible ? 1 : 0);
    timing += fmt::format("{},{},{},{},{}\n", r->axis, fmt_num(r->axis_value), r->scheduler, r->run, fmt_num(r->wall_s));
  }
  emit("metrics.csv", metrics);

  const auto summary = summarize(table, order);
  std::string sum = "axis,axis_value,scheduler,runs,mean,std,feasible_rate\n";
  std::string timing_sum = "axis,axis_value,scheduler,runs,mean_wall_s\n";
  for (const auto& s : summary) {
    sum += fmt::format("{},{},{},{},{},{},{}\n", s.axis, fmt_num(s.axis_value), s.scheduler, s.runs, fmt_num(s.mean),
                       fmt_num(s.std), fmt_num(s.feasible_rate));
    timing_sum += fmt::format("{},{},{},{},{}\n", s.axis, fmt_num(s.axis_value), s.scheduler, s.runs, fmt_num(s.mean_wall_s));
  }
  emit("summary.csv", sum);
  emit("timing.csv", timing);
  emit("timing_summary.csv", timing_sum);

  // Wide plot data: one row per axis value, mean and std per scheduler.
  std::map<std::string, std::map<double, std::map<std::string, const SummaryRow*>>> by_axis;
  for (const auto& s : summary) by_axis[s.axis][s.axis_value][s.scheduler] = &s;
  for (const auto& [axis, points] : by_axis) {
    if (axis == "none") continue;
    std::vector<std::string> present;
    for (const auto& name : order) {
      for (const auto& [v, cells] : points) {
        if (cells.contains(name)) {
          present.push_back(name);
          break;
        }
      }
    }
    std::string plot = axis;
    for (const auto& name : present) plot += fmt::format(",{0}_mean,{0}_std", name);
    plot += "\n";
    for (const auto& [v, cells] : points) {
      plot += fmt_num(v);
      for (const auto& name : present) {
        const auto it = cells.find(name);
        if (it == cells.end()) {
          plot += ",,";
        } else {
          plot += fmt::format(",{},{}", fmt_num(it->second->mean), fmt_num(it->second->std));
        }
      }
      plot += "\n";
    }
    emit(fmt::format("plot_{}.csv", axis), plot);
  }
  return written;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace vcsched::harness
