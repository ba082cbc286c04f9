#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "afbs/common.hpp"

namespace afbs {

/// Random projection R (p x d) with i.i.d. N(0, 1/p) entries, p < d.
///
/// A single matrix is published by the server before training and shared by
/// every client so that encrypted representations are mutually comparable.
class ProjectionMatrix {
 public:
  ProjectionMatrix(int source_dim, int target_dim, std::uint64_t seed);

  int source_dim() const { return static_cast<int>(matrix_.cols()); }
  int target_dim() const { return static_cast<int>(matrix_.rows()); }
  std::uint64_t seed() const { return seed_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

  Eigen::VectorXd project(std::span<const double> x) const;

 private:
  Eigen::MatrixXd matrix_;
  std::uint64_t seed_;
};

// Default target dimension, ceil(0.6 * d), clamped to [1, d - 1].
int default_target_dim(int source_dim);

struct EncryptedDistribution {
  ClientId client_id = 0;
  Eigen::MatrixXd matrix;  // d x p

  int source_dim() const { return static_cast<int>(matrix.rows()); }
  int target_dim() const { return static_cast<int>(matrix.cols()); }
  // Row-major flattening, the layout used on the wire and by K-means.
  std::vector<double> flatten() const;
  std::vector<double> row_mean() const;
};

/// Stacks d copies of the distribution and adds i.i.d. N(0, sigma^2) noise.
/// The result is full rank with probability one.
Eigen::MatrixXd lift_with_noise(std::span<const double> distribution, double sigma, Rng& rng);

/// Lifted, noised distribution multiplied by R^T; shape d x p and rank <= p.
EncryptedDistribution encrypt(ClientId client_id, std::span<const double> distribution,
                              const ProjectionMatrix& projection, double sigma, Rng& rng);

/// Fraction of unordered point pairs whose squared distance survives the
/// projection within a (1 +/- epsilon) factor. Coincident pairs count as
/// preserved.
double verify_jl(const std::vector<std::vector<double>>& points,
                 const ProjectionMatrix& projection, double epsilon);

double smallest_singular_value(const Eigen::MatrixXd& m);
int numerical_rank(const Eigen::MatrixXd& m, double rel_tol = 1e-10);

}  // namespace afbs
