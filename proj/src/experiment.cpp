#include "afbs/experiment.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace afbs {
namespace {

enum Stream : std::uint64_t {
  kData = 100,
  kLatency = 101,
  kProjection = 102,
  kEncryption = 103,
  kKMeans = 104,
  kModelInit = 105,
};

}  // namespace

Scenario build_scenario(const ExperimentConfig& config) {
  validate(config);
  Scenario sc;
  sc.config = config;
  const std::uint64_t seed = config.seed;

  if (config.data_path.empty()) {
    DataGenParams params = config.data;
    params.num_clients = config.num_clients;
    sc.dataset = generate(params, mix_seed(seed, kData));
  } else {
    sc.dataset = load_dataset_json(config.data_path);
    sc.config.num_clients = sc.dataset.num_clients();
    sc.config.data.num_labels = sc.dataset.num_labels;
    sc.config.data.feature_dim = sc.dataset.feature_dim;
    sc.config.data.num_clusters = sc.dataset.num_clusters;
  }
  const int n = sc.dataset.num_clients();
  const int d = sc.dataset.num_labels;

  {
    Rng rng(mix_seed(seed, kLatency));
    sc.latencies.resize(static_cast<std::size_t>(n));
    for (auto& l : sc.latencies) l = rng.uniform(config.latency.uniform_min, config.latency.uniform_max);
  }

  const int p = sc.config.resolved_p();
  const ProjectionMatrix projection(d, p, mix_seed(seed, kProjection));
  sc.encrypted.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng(mix_seed(seed, kEncryption, static_cast<std::uint64_t>(i)));
    const auto dist = label_distribution(sc.dataset.clients[static_cast<std::size_t>(i)]);
    sc.encrypted.push_back(encrypt(i, dist, projection, config.projection.sigma, rng));
  }

  KMeansOptions km;
  km.k = sc.config.resolved_k();
  km.max_iterations = config.clustering.max_iterations;
  km.tolerance = config.clustering.tolerance;
  km.restarts = config.clustering.restarts;
  if (km.k > n) {
    throw ConfigError(fmt::format("cannot form {} clusters from {} clients", km.k, n));
  }
  sc.assignment = std::make_shared<const ClusterAssignment>(
      fit_kmeans(sc.encrypted, km, mix_seed(seed, kKMeans)));
  sc.cluster_ari = adjusted_rand_index(sc.assignment->labels(), sc.dataset.cluster_of);
  spdlog::info("clustered {} clients into {} groups (ARI vs generator {:.4f})", n, km.k,
               sc.cluster_ari);

  sc.model.kind = config.model.kind;
  sc.model.input_dim = sc.dataset.feature_dim;
  sc.model.num_classes = d;
  sc.model.hidden = config.model.hidden;
  sc.initial_model = init_params(sc.model, mix_seed(seed, kModelInit));
  return sc;
}

SimulationSetup make_setup(const Scenario& sc) {
  SimulationSetup setup;
  setup.dataset = &sc.dataset;
  const int n = sc.dataset.num_clients();
  for (int i = 0; i < n; ++i) {
    ClientProfile c;
    c.id = i;
    c.shard = &sc.dataset.clients[static_cast<std::size_t>(i)];
    c.latency = sc.latencies[static_cast<std::size_t>(i)];
    c.cluster_id = sc.assignment->cluster_of(i);
    setup.clients.push_back(c);
  }
  setup.training.model = sc.model;
  setup.training.trainer = sc.config.trainer;
  setup.training.seed = sc.config.seed;
  setup.training.latency_jitter = sc.config.latency.jitter;
  setup.initial_model = sc.initial_model;
  setup.max_in_flight = sc.config.m_active;
  setup.horizon = sc.config.horizon;
  setup.metrics = sc.config.metrics;
  setup.seed = sc.config.seed;
  return setup;
}

RunReport make_report(const Scenario& sc, const std::string& strategy,
                      const SimulationResult& result) {
  RunReport r;
  r.strategy = strategy;
  r.seed = sc.config.seed;
  r.dataset_checksum = sc.dataset.checksum();
  ExperimentConfig echo = sc.config;
  echo.strategy.name = strategy;
  echo.projection.p = echo.resolved_p();
  echo.clustering.k = echo.resolved_k();
  r.config_echo = to_json(echo);
  r.timeline = result.timeline;
  r.targets = sc.config.metrics.targets;
  r.work = result.work;
  r.arrivals = result.arrival_count;
  r.final_round = result.final_round;
  r.cluster_k = sc.assignment->k();
  r.cluster_of = sc.assignment->labels();
  r.cluster_ari = sc.cluster_ari;
  r.handle_time_ns = result.handle_time_ns;
  return r;
}

RunReport run_simulation(const Scenario& sc, AggregationStrategy& strategy) {
  const auto result = simulate(make_setup(sc), strategy);
  spdlog::info("{}: {} arrivals, {} aggregations, final round {}", strategy.name(),
               result.arrival_count, result.work.size(), result.final_round);
  return make_report(sc, strategy.name(), result);
}

RunReport run_simulation(const ExperimentConfig& config, AggregationStrategy& strategy) {
  return run_simulation(build_scenario(config), strategy);
}

RunReport run_experiment(const ExperimentConfig& config) {
  const Scenario sc = build_scenario(config);
  auto strategy = make_strategy(config.strategy, sc.assignment);
  return run_simulation(sc, *strategy);
}

}  // namespace afbs
