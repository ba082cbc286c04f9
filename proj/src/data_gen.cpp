#include "afbs/data_gen.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include "json.hpp"

namespace afbs {
namespace {

enum Stream : std::uint64_t { kCenters = 1, kClusters = 2, kClient = 3 };

void draw_samples(Rng& rng, const std::vector<double>& label_dist,
                  const std::vector<std::vector<double>>& centers, int count,
                  SampleSet& out, std::vector<int>* histogram) {
  std::vector<double> x(static_cast<std::size_t>(out.feature_dim));
  for (int s = 0; s < count; ++s) {
    const int label = rng.categorical(label_dist);
    const auto& c = centers[static_cast<std::size_t>(label)];
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = c[j] + rng.normal();
    out.push_back(x, label);
    if (histogram != nullptr) ++(*histogram)[static_cast<std::size_t>(label)];
  }
}

SampleSet samples_from_json(const nlohmann::json& j, int feature_dim, int num_labels) {
  SampleSet set;
  set.feature_dim = feature_dim;
  const auto& feats = j.at("features");
  const auto& labels = j.at("labels");
  if (feats.size() != labels.size()) {
    throw ConfigError("dataset json: features/labels length mismatch");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto row = feats[i].get<std::vector<double>>();
    const int label = labels[i].get<int>();
    if (static_cast<int>(row.size()) != feature_dim) {
      throw ConfigError(fmt::format("dataset json: sample {} has {} features, expected {}", i,
                                    row.size(), feature_dim));
    }
    if (label < 0 || label >= num_labels) {
      throw ConfigError(fmt::format("dataset json: label {} outside [0, {})", label, num_labels));
    }
    set.push_back(row, label);
  }
  return set;
}

nlohmann::json samples_to_json(const SampleSet& set) {
  nlohmann::json feats = nlohmann::json::array();
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto r = set.row(i);
    feats.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return {{"features", std::move(feats)}, {"labels", set.labels}};
}

}  // namespace

void SampleSet::push_back(std::span<const double> x, int label) {
  features.insert(features.end(), x.begin(), x.end());
  labels.push_back(label);
}

std::uint64_t FederatedDataset::checksum() const {
  Fnv1a h;
  h.update_value(num_labels);
  h.update_value(feature_dim);
  auto hash_set = [&h](const SampleSet& s) {
    h.update(s.features.data(), s.features.size() * sizeof(double));
    h.update(s.labels.data(), s.labels.size() * sizeof(int));
  };
  for (std::size_t i = 0; i < clients.size(); ++i) {
    h.update_value(cluster_of[i]);
    hash_set(clients[i].samples);
  }
  hash_set(test);
  return h.digest();
}

void validate(const DataGenParams& p) {
  if (p.num_clusters < 1) throw ConfigError("data.K must be >= 1");
  if (p.num_labels < 2) throw ConfigError("data.d must be >= 2");
  if (!(p.alpha > 0.0)) throw ConfigError("data.alpha must be > 0");
  if (p.num_clients < p.num_clusters) {
    throw ConfigError(fmt::format("num_clients ({}) must be >= data.K ({})", p.num_clients,
                                  p.num_clusters));
  }
  if (p.volume_sigma < 0.0) throw ConfigError("data.volume_sigma must be >= 0");
  if (p.base_volume < 1) throw ConfigError("data.base_volume must be >= 1");
  if (p.feature_dim < 1) throw ConfigError("data.feature_dim must be >= 1");
  if (!(p.center_scale > 0.0)) throw ConfigError("data.center_scale must be > 0");
  if (!(p.test_fraction > 0.0 && p.test_fraction < 1.0)) {
    throw ConfigError("data.test_fraction must be in (0, 1)");
  }
}

FederatedDataset generate(const DataGenParams& p, std::uint64_t seed) {
  validate(p);
  FederatedDataset ds;
  ds.num_labels = p.num_labels;
  ds.feature_dim = p.feature_dim;
  ds.num_clusters = p.num_clusters;
  ds.test.feature_dim = p.feature_dim;

  std::vector<std::vector<double>> centers(static_cast<std::size_t>(p.num_labels));
  {
    Rng rng(mix_seed(seed, kCenters));
    for (auto& c : centers) {
      c.resize(static_cast<std::size_t>(p.feature_dim));
      for (auto& v : c) v = rng.normal(0.0, p.center_scale);
    }
  }
  {
    Rng rng(mix_seed(seed, kClusters));
    for (int k = 0; k < p.num_clusters; ++k) {
      ds.cluster_distributions.push_back(rng.dirichlet(p.alpha, p.num_labels));
    }
  }

  const double mu = std::log(static_cast<double>(p.base_volume));
  const double holdout_ratio = p.test_fraction / (1.0 - p.test_fraction);
  ds.clients.resize(static_cast<std::size_t>(p.num_clients));
  ds.cluster_of.resize(static_cast<std::size_t>(p.num_clients));
  for (int i = 0; i < p.num_clients; ++i) {
    Rng rng(mix_seed(seed, kClient, static_cast<std::uint64_t>(i)));
    const int cluster = i % p.num_clusters;
    ds.cluster_of[static_cast<std::size_t>(i)] = cluster;
    const double raw = std::exp(rng.normal(mu, p.volume_sigma));
    const int volume = std::max(1, static_cast<int>(std::llround(raw)));

    auto& shard = ds.clients[static_cast<std::size_t>(i)];
    shard.samples.feature_dim = p.feature_dim;
    shard.label_histogram.assign(static_cast<std::size_t>(p.num_labels), 0);
    const auto& dist = ds.cluster_distributions[static_cast<std::size_t>(cluster)];
    draw_samples(rng, dist, centers, volume, shard.samples, &shard.label_histogram);

    const int held_out = static_cast<int>(std::llround(volume * holdout_ratio));
    draw_samples(rng, dist, centers, held_out, ds.test, nullptr);
  }
  return ds;
}

std::vector<double> label_distribution(std::span<const int> histogram) {
  long long total = 0;
  for (int c : histogram) total += c;
  if (total <= 0) throw std::invalid_argument("label_distribution: empty shard");
  std::vector<double> out(histogram.size());
  for (std::size_t i = 0; i < histogram.size(); ++i) {
    out[i] = static_cast<double>(histogram[i]) / static_cast<double>(total);
  }
  return out;
}

std::vector<double> label_distribution(const ClientShard& shard) {
  return label_distribution(std::span<const int>(shard.label_histogram));
}

void save_dataset_json(const FederatedDataset& ds, const std::string& path) {
  nlohmann::json j;
  j["d"] = ds.num_labels;
  j["feature_dim"] = ds.feature_dim;
  j["K"] = ds.num_clusters;
  nlohmann::json clients = nlohmann::json::array();
  for (std::size_t i = 0; i < ds.clients.size(); ++i) {
    auto c = samples_to_json(ds.clients[i].samples);
    c["cluster"] = ds.cluster_of[i];
    clients.push_back(std::move(c));
  }
  j["clients"] = std::move(clients);
  j["test"] = samples_to_json(ds.test);
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write dataset to '{}'", path));
  out << j.dump() << '\n';
  if (!out) throw std::runtime_error(fmt::format("write failed for '{}'", path));
}

FederatedDataset load_dataset_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open dataset '{}'", path));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("dataset '{}': {}", path, e.what()));
  }
  try {
    FederatedDataset ds;
    ds.num_labels = j.at("d").get<int>();
    ds.feature_dim = j.at("feature_dim").get<int>();
    if (ds.num_labels < 2 || ds.feature_dim < 1) {
      throw ConfigError("dataset json: d must be >= 2 and feature_dim >= 1");
    }
    int max_cluster = 0;
    for (const auto& c : j.at("clients")) {
      ClientShard shard;
      shard.samples = samples_from_json(c, ds.feature_dim, ds.num_labels);
      if (shard.samples.size() == 0) throw ConfigError("dataset json: client with no samples");
      shard.label_histogram.assign(static_cast<std::size_t>(ds.num_labels), 0);
      for (int l : shard.samples.labels) ++shard.label_histogram[static_cast<std::size_t>(l)];
      const int cluster = c.value("cluster", 0);
      max_cluster = std::max(max_cluster, cluster);
      ds.cluster_of.push_back(cluster);
      ds.clients.push_back(std::move(shard));
    }
    if (ds.clients.empty()) throw ConfigError("dataset json: no clients");
    ds.num_clusters = j.value("K", max_cluster + 1);
    ds.test = samples_from_json(j.at("test"), ds.feature_dim, ds.num_labels);
    return ds;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("dataset '{}': {}", path, e.what()));
  }
}

}  // namespace afbs
