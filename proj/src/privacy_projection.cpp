#include "afbs/privacy_projection.hpp"

#include <cmath>

#include <fmt/format.h>

namespace afbs {

ProjectionMatrix::ProjectionMatrix(int source_dim, int target_dim, std::uint64_t seed)
    : seed_(seed) {
  if (target_dim < 1 || target_dim >= source_dim) {
    throw ConfigError(fmt::format(
        "projection target dim p={} must satisfy 1 <= p < d={}", target_dim, source_dim));
  }
  matrix_.resize(target_dim, source_dim);
  Rng rng(seed);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(target_dim));
  for (int r = 0; r < target_dim; ++r) {
    for (int c = 0; c < source_dim; ++c) matrix_(r, c) = rng.normal(0.0, stddev);
  }
}

Eigen::VectorXd ProjectionMatrix::project(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != matrix_.cols()) {
    throw std::invalid_argument(
        fmt::format("project: vector of length {} vs d={}", x.size(), matrix_.cols()));
  }
  Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  return matrix_ * v;
}

int default_target_dim(int source_dim) {
  const int p = static_cast<int>(std::ceil(0.6 * source_dim));
  return std::clamp(p, 1, std::max(1, source_dim - 1));
}

std::vector<double> EncryptedDistribution::flatten() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(matrix.size()));
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) out.push_back(matrix(r, c));
  }
  return out;
}

std::vector<double> EncryptedDistribution::row_mean() const {
  Eigen::VectorXd m = matrix.colwise().mean().transpose();
  return {m.data(), m.data() + m.size()};
}

Eigen::MatrixXd lift_with_noise(std::span<const double> distribution, double sigma, Rng& rng) {
  if (!(sigma > 0.0)) throw ConfigError("projection.sigma must be > 0");
  const auto d = static_cast<Eigen::Index>(distribution.size());
  Eigen::MatrixXd lifted(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) {
      lifted(r, c) = distribution[static_cast<std::size_t>(c)] + rng.normal(0.0, sigma);
    }
  }
  return lifted;
}

EncryptedDistribution encrypt(ClientId client_id, std::span<const double> distribution,
                              const ProjectionMatrix& projection, double sigma, Rng& rng) {
  if (static_cast<int>(distribution.size()) != projection.source_dim()) {
    throw std::invalid_argument(fmt::format("encrypt: distribution length {} vs R.d={}",
                                            distribution.size(), projection.source_dim()));
  }
  EncryptedDistribution out;
  out.client_id = client_id;
  out.matrix = lift_with_noise(distribution, sigma, rng) * projection.matrix().transpose();
  return out;
}

double verify_jl(const std::vector<std::vector<double>>& points,
                 const ProjectionMatrix& projection, double epsilon) {
  std::vector<Eigen::VectorXd> projected;
  projected.reserve(points.size());
  for (const auto& p : points) projected.push_back(projection.project(p));

  std::size_t preserved = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      double raw = 0.0;
      for (std::size_t k = 0; k < points[i].size(); ++k) {
        const double diff = points[i][k] - points[j][k];
        raw += diff * diff;
      }
      const double proj = (projected[i] - projected[j]).squaredNorm();
      ++pairs;
      if ((1.0 - epsilon) * raw <= proj && proj <= (1.0 + epsilon) * raw) ++preserved;
    }
  }
  return pairs == 0 ? 1.0 : static_cast<double>(preserved) / static_cast<double>(pairs);
}

double smallest_singular_value(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  return s.size() == 0 ? 0.0 : s(s.size() - 1);
}

int numerical_rank(const Eigen::MatrixXd& m, double rel_tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * s(0)) ++rank;
  }
  return rank;
}

}  // namespace afbs
