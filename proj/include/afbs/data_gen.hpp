#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "afbs/common.hpp"

namespace afbs {

/// Row-major block of labelled samples.
struct SampleSet {
  int feature_dim = 0;
  std::vector<double> features;  // size() * feature_dim values
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * static_cast<std::size_t>(feature_dim),
            static_cast<std::size_t>(feature_dim)};
  }
  void push_back(std::span<const double> x, int label);
};

struct ClientShard {
  SampleSet samples;
  std::vector<int> label_histogram;  // length d

  // Number of samples (V).
  int volume() const { return static_cast<int>(samples.size()); }
};

struct FederatedDataset {
  int num_labels = 0;
  int feature_dim = 0;
  int num_clusters = 0;
  std::vector<ClientShard> clients;
  std::vector<int> cluster_of;                      // ground-truth cluster per client
  std::vector<std::vector<double>> cluster_distributions;  // K x d
  SampleSet test;                                   // global held-out split

  int num_clients() const { return static_cast<int>(clients.size()); }
  std::uint64_t checksum() const;
};

struct DataGenParams {
  int num_clients = 600;
  int num_clusters = 5;
  int num_labels = 10;
  double alpha = 0.1;
  double volume_sigma = 1.0;
  int base_volume = 200;
  int feature_dim = 20;
  // Scale of the per-label Gaussian blob centers.
  double center_scale = 1.0;
  double test_fraction = 0.1;
};

void validate(const DataGenParams& params);

/// Synthetic federated dataset: K label-skewed clusters of clients, IID
/// sampling within a cluster, log-normal client volumes, and Gaussian
/// feature blobs per label.
FederatedDataset generate(const DataGenParams& params, std::uint64_t seed);

/// Normalized label histogram of a shard.
std::vector<double> label_distribution(const ClientShard& shard);

std::vector<double> label_distribution(std::span<const int> histogram);

// JSON exchange format for datasets.
void save_dataset_json(const FederatedDataset& dataset, const std::string& path);
FederatedDataset load_dataset_json(const std::string& path);

}  // namespace afbs
