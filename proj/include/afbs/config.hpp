#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "afbs/clustering.hpp"
#include "afbs/data_gen.hpp"
#include "afbs/local_trainer.hpp"
#include "afbs/metrics_report.hpp"
#include "afbs/strategies.hpp"

namespace afbs {

struct LatencyConfig {
  double uniform_min = 0.0;
  double uniform_max = 6000.0;
  double jitter = 0.0;
};

struct ModelConfig {
  ModelKind kind = ModelKind::kSoftmax;
  int hidden = 32;
};

struct ProjectionConfig {
  int p = 0;  // 0 selects ceil(0.6 * d)
  double sigma = 1e-3;
};

struct ClusteringConfig {
  int k = 0;  // 0 selects the generator's K
  int max_iterations = 300;
  double tolerance = 1e-6;
  int restarts = 10;
};

/// Resolved experiment configuration. Every field has a default; JSON input
/// may override any subset, and unknown keys are rejected.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  int num_clients = 600;
  int m_active = 120;
  double horizon = 20.0 * 86400.0;
  LatencyConfig latency;
  DataGenParams data;         // data.num_clients is mirrored from num_clients
  std::string data_path;      // optional dataset JSON; replaces generation
  TrainerConfig trainer;
  ModelConfig model;
  StrategyConfig strategy;
  ProjectionConfig projection;
  ClusteringConfig clustering;
  MetricsSchedule metrics;

  int resolved_p() const;
  int resolved_k() const;
};

void validate(const ExperimentConfig& cfg);

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

}  // namespace afbs
