#include "afbs/config.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

namespace afbs {
namespace {

using nlohmann::json;

// Reads typed fields out of one JSON object and rejects unknown keys.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("'{}' must be a JSON object", where()));
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(fmt::format("'{}{}' has the wrong type", prefix(), key));
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string child_path(const char* key) const { return prefix() + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) {
        throw ConfigError(fmt::format("unknown config key '{}{}'", prefix(), key));
      }
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  std::string prefix() const { return path_.empty() ? "" : path_ + "."; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Fn>
void with_section(Section& parent, const char* key, Fn&& fn) {
  if (const json* c = parent.child(key)) {
    Section s(*c, parent.child_path(key));
    fn(s);
    s.finish();
  }
}

}  // namespace

int ExperimentConfig::resolved_p() const {
  return projection.p > 0 ? projection.p : default_target_dim(data.num_labels);
}

int ExperimentConfig::resolved_k() const {
  return clustering.k > 0 ? clustering.k : data.num_clusters;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.num_clients < 1) throw ConfigError("num_clients must be >= 1");
  if (cfg.m_active < 1) throw ConfigError("M_active must be >= 1");
  if (!(cfg.horizon >= 0.0)) throw ConfigError("horizon_virtual_seconds must be >= 0");
  if (!(cfg.latency.uniform_min >= 0.0 && cfg.latency.uniform_min < cfg.latency.uniform_max)) {
    throw ConfigError("latency requires 0 <= uniform_min < uniform_max");
  }
  if (!(cfg.latency.jitter >= 0.0 && cfg.latency.jitter < 1.0)) {
    throw ConfigError("latency.jitter must be in [0, 1)");
  }
  if (cfg.data_path.empty()) {
    DataGenParams d = cfg.data;
    d.num_clients = cfg.num_clients;
    validate(d);
  }
  validate(cfg.trainer);
  if (cfg.model.hidden < 1) throw ConfigError("model.hidden must be >= 1");
  validate(cfg.strategy);
  if (!(cfg.projection.sigma > 0.0)) throw ConfigError("projection.sigma must be > 0");
  if (cfg.projection.p < 0) throw ConfigError("projection.p must be >= 0");
  if (cfg.data_path.empty() && cfg.projection.p >= cfg.data.num_labels) {
    throw ConfigError("projection.p must be smaller than data.d");
  }
  if (cfg.clustering.k < 0) throw ConfigError("clustering.K_means_k must be >= 0");
  if (cfg.clustering.max_iterations < 1) throw ConfigError("clustering.max_iterations must be >= 1");
  if (cfg.clustering.restarts < 1) throw ConfigError("clustering.restarts must be >= 1");
  if (!(cfg.clustering.tolerance >= 0.0)) throw ConfigError("clustering.tolerance must be >= 0");
  if (cfg.data_path.empty() && cfg.resolved_k() > cfg.num_clients) {
    throw ConfigError("clustering.K_means_k exceeds num_clients");
  }
  if (!(cfg.metrics.cadence > 0.0)) throw ConfigError("metrics.cadence must be > 0");
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  Section root(j, "");
  root.read("seed", cfg.seed);
  root.read("num_clients", cfg.num_clients);
  root.read("M_active", cfg.m_active);
  root.read("horizon_virtual_seconds", cfg.horizon);
  with_section(root, "latency", [&](Section& s) {
    s.read("uniform_min", cfg.latency.uniform_min);
    s.read("uniform_max", cfg.latency.uniform_max);
    s.read("jitter", cfg.latency.jitter);
  });
  with_section(root, "data", [&](Section& s) {
    s.read("K", cfg.data.num_clusters);
    s.read("d", cfg.data.num_labels);
    s.read("alpha", cfg.data.alpha);
    s.read("volume_sigma", cfg.data.volume_sigma);
    s.read("base_volume", cfg.data.base_volume);
    s.read("feature_dim", cfg.data.feature_dim);
    s.read("center_scale", cfg.data.center_scale);
    s.read("test_fraction", cfg.data.test_fraction);
    s.read("path", cfg.data_path);
  });
  with_section(root, "trainer", [&](Section& s) {
    s.read("eta_c", cfg.trainer.eta_c);
    s.read("decay", cfg.trainer.decay);
    s.read("epochs", cfg.trainer.epochs);
    s.read("batch_size", cfg.trainer.batch_size);
    s.read("local_steps", cfg.trainer.local_steps);
    std::string model = to_string(cfg.model.kind);
    s.read("model", model);
    cfg.model.kind = parse_model_kind(model);
    s.read("hidden", cfg.model.hidden);
  });
  with_section(root, "strategy", [&](Section& s) {
    s.read("name", cfg.strategy.name);
    s.read("eta_g", cfg.strategy.eta_g);
    s.read("C", cfg.strategy.buffer_size);
    std::string mode = to_string(cfg.strategy.decay_mode);
    s.read("decay_mode", mode);
    cfg.strategy.decay_mode = parse_decay_mode(mode);
    s.read("rescue", cfg.strategy.rescue);
    s.read("async_mix_alpha", cfg.strategy.async_mix_alpha);
  });
  with_section(root, "projection", [&](Section& s) {
    s.read("p", cfg.projection.p);
    s.read("sigma", cfg.projection.sigma);
  });
  with_section(root, "clustering", [&](Section& s) {
    s.read("K_means_k", cfg.clustering.k);
    s.read("max_iterations", cfg.clustering.max_iterations);
    s.read("tolerance", cfg.clustering.tolerance);
    s.read("restarts", cfg.clustering.restarts);
  });
  with_section(root, "metrics", [&](Section& s) {
    s.read("cadence", cfg.metrics.cadence);
    s.read("include_t0", cfg.metrics.include_t0);
    s.read("targets", cfg.metrics.targets);
  });
  root.finish();
  cfg.data.num_clients = cfg.num_clients;
  validate(cfg);
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  json data = {{"K", cfg.data.num_clusters},
               {"d", cfg.data.num_labels},
               {"alpha", cfg.data.alpha},
               {"volume_sigma", cfg.data.volume_sigma},
               {"base_volume", cfg.data.base_volume},
               {"feature_dim", cfg.data.feature_dim},
               {"center_scale", cfg.data.center_scale},
               {"test_fraction", cfg.data.test_fraction},
               {"path", cfg.data_path}};
  return {
      {"seed", cfg.seed},
      {"num_clients", cfg.num_clients},
      {"M_active", cfg.m_active},
      {"horizon_virtual_seconds", cfg.horizon},
      {"latency",
       {{"uniform_min", cfg.latency.uniform_min},
        {"uniform_max", cfg.latency.uniform_max},
        {"jitter", cfg.latency.jitter}}},
      {"data", std::move(data)},
      {"trainer",
       {{"eta_c", cfg.trainer.eta_c},
        {"decay", cfg.trainer.decay},
        {"epochs", cfg.trainer.epochs},
        {"batch_size", cfg.trainer.batch_size},
        {"local_steps", cfg.trainer.local_steps},
        {"model", to_string(cfg.model.kind)},
        {"hidden", cfg.model.hidden}}},
      {"strategy",
       {{"name", cfg.strategy.name},
        {"eta_g", cfg.strategy.eta_g},
        {"C", cfg.strategy.buffer_size},
        {"decay_mode", to_string(cfg.strategy.decay_mode)},
        {"rescue", cfg.strategy.rescue},
        {"async_mix_alpha", cfg.strategy.async_mix_alpha}}},
      {"projection", {{"p", cfg.projection.p}, {"sigma", cfg.projection.sigma}}},
      {"clustering",
       {{"K_means_k", cfg.clustering.k},
        {"max_iterations", cfg.clustering.max_iterations},
        {"tolerance", cfg.clustering.tolerance},
        {"restarts", cfg.clustering.restarts}}},
      {"metrics",
       {{"cadence", cfg.metrics.cadence},
        {"include_t0", cfg.metrics.include_t0},
        {"targets", cfg.metrics.targets}}},
  };
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("config '{}' is not valid JSON: {}", path, e.what()));
  }
  return config_from_json(j);
}

}  // namespace afbs
