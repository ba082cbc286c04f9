#pragma once

#include <cstdint>
#include <vector>

#include "afbs/common.hpp"
#include "afbs/privacy_projection.hpp"

namespace afbs {

struct KMeansOptions {
  int k = 1;
  int max_iterations = 300;
  double tolerance = 1e-6;  // max centroid shift (Euclidean) that counts as converged
  int restarts = 10;        // independent k-means++ seedings; lowest objective wins
};

/// Immutable client -> cluster map produced once before training.
class ClusterAssignment {
 public:
  ClusterAssignment() = default;
  ClusterAssignment(std::vector<ClientId> clients, std::vector<int> labels,
                    std::vector<std::vector<double>> centroids);

  int k() const { return static_cast<int>(centroids_.size()); }
  int cluster_of(ClientId client) const;
  bool contains(ClientId client) const;
  const std::vector<std::vector<double>>& centroids() const { return centroids_; }
  // Labels in the order of clients().
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<ClientId>& clients() const { return clients_; }

 private:
  std::vector<ClientId> clients_;
  std::vector<int> labels_;
  std::vector<int> lookup_;  // dense, indexed by client id; -1 when absent
  std::vector<std::vector<double>> centroids_;
};

struct KMeansResult {
  std::vector<int> labels;
  std::vector<std::vector<double>> centroids;
  double objective = 0.0;
  int iterations = 0;
  // Objective after every assignment step of the winning restart.
  std::vector<double> objective_history;
};

/// Lloyd's algorithm with k-means++ seeding. Empty clusters are reseeded
/// at the point farthest from its assigned centroid.
KMeansResult kmeans(const std::vector<std::vector<double>>& points, const KMeansOptions& options,
                    std::uint64_t seed);

/// K-means over flattened d x p encrypted distributions.
ClusterAssignment fit_kmeans(const std::vector<EncryptedDistribution>& encrypted,
                             const KMeansOptions& options, std::uint64_t seed);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace afbs
