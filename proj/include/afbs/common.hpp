#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace afbs {

using ClientId = int;

// Error taxonomy. The CLI maps ConfigError to exit code 2 and everything
// else to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StrategyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Model weights as a flat vector; the unit of broadcast and aggregation.
using ModelParams = std::vector<double>;

bool all_finite(const ModelParams& params);

// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t a = 0, std::uint64_t b = 0);

/// Seeded random source with platform-independent sampling.
///
/// std::mt19937_64 output is fully specified by the standard, but the
/// <random> distributions are not, so the distributions used by the
/// simulator are implemented here on top of the raw engine. This keeps
/// runs bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer on [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  // Gamma(shape, 1) via Marsaglia-Tsang.
  double gamma(double shape);
  std::vector<double> dirichlet(double alpha, int dim);
  // Index drawn according to non-negative weights summing to a positive value.
  int categorical(const std::vector<double>& weights);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a over raw bytes, used for dataset fingerprints.
class Fnv1a {
 public:
  void update(const void* data, std::size_t len);
  template <typename T>
  void update_value(const T& v) { update(&v, sizeof(T)); }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace afbs
