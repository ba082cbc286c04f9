#pragma once

#include <memory>
#include <vector>

#include "afbs/clustering.hpp"
#include "afbs/config.hpp"
#include "afbs/data_gen.hpp"
#include "afbs/metrics_report.hpp"
#include "afbs/privacy_projection.hpp"
#include "afbs/sim_core.hpp"

namespace afbs {

/// Everything that is shared by all strategies of one experiment: data,
/// latencies, the published projection and the one-time clustering.
struct Scenario {
  ExperimentConfig config;
  FederatedDataset dataset;
  std::vector<double> latencies;
  std::vector<EncryptedDistribution> encrypted;
  std::shared_ptr<const ClusterAssignment> assignment;
  double cluster_ari = 0.0;
  ModelSpec model;
  ModelParams initial_model;
};

Scenario build_scenario(const ExperimentConfig& config);

SimulationSetup make_setup(const Scenario& scenario);

RunReport make_report(const Scenario& scenario, const std::string& strategy,
                      const SimulationResult& result);

RunReport run_simulation(const Scenario& scenario, AggregationStrategy& strategy);
RunReport run_simulation(const ExperimentConfig& config, AggregationStrategy& strategy);

// Builds the scenario and the strategy named in the config.
RunReport run_experiment(const ExperimentConfig& config);

}  // namespace afbs
