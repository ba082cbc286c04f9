#include <cmath>

#include "doctest.h"

#include "afbs/privacy_projection.hpp"

using namespace afbs;

TEST_CASE("projection shape and seeding") {
  ProjectionMatrix r(10, 6, 1);
  CHECK(r.source_dim() == 10);
  CHECK(r.target_dim() == 6);
  CHECK(ProjectionMatrix(10, 6, 1).matrix() == r.matrix());
  CHECK(ProjectionMatrix(10, 6, 2).matrix() != r.matrix());
}

TEST_CASE("projection entries have variance 1/p") {
  ProjectionMatrix r(400, 100, 3);
  const double var = r.matrix().array().square().mean();
  CHECK(var == doctest::Approx(1.0 / 100).epsilon(0.03));
}

TEST_CASE("target dimension bounds") {
  CHECK_THROWS_AS(ProjectionMatrix(10, 10, 1), ConfigError);
  CHECK_THROWS_AS(ProjectionMatrix(10, 0, 1), ConfigError);
  CHECK(default_target_dim(10) == 6);
  CHECK(default_target_dim(2) == 1);
}

TEST_CASE("lifted matrix is full rank") {
  Rng rng(4);
  std::vector<double> dist(10, 0.0);
  dist[3] = 1.0;  // rank one before noise
  for (int t = 0; t < 50; ++t) {
    const auto m = lift_with_noise(dist, 1e-3, rng);
    CHECK(m.rows() == 10);
    CHECK(m.cols() == 10);
    CHECK(numerical_rank(m) == 10);
    CHECK(smallest_singular_value(m) > 1e-12);
  }
}

TEST_CASE("noise must be positive") {
  Rng rng(1);
  std::vector<double> dist(5, 0.2);
  CHECK_THROWS_AS(lift_with_noise(dist, 0.0, rng), ConfigError);
}

TEST_CASE("encryption shape and rank") {
  Rng rng(5);
  ProjectionMatrix r(10, 6, 2);
  std::vector<double> dist(10, 0.1);
  const auto e = encrypt(7, dist, r, 1e-3, rng);
  CHECK(e.client_id == 7);
  CHECK(e.source_dim() == 10);
  CHECK(e.target_dim() == 6);
  CHECK(numerical_rank(e.matrix) <= 6);
  CHECK(e.flatten().size() == 60);
  CHECK(e.flatten()[1] == e.matrix(0, 1));
  CHECK(e.flatten()[6] == e.matrix(1, 0));
}

TEST_CASE("tiny noise barely moves the encryption") {
  ProjectionMatrix r(10, 6, 2);
  std::vector<double> dist(10, 0.1);
  Rng a(1), b(1);
  const auto lo = encrypt(0, dist, r, 1e-9, a);
  const auto exact = r.project(dist);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 6; ++j) CHECK(lo.matrix(i, j) == doctest::Approx(exact(j)).epsilon(1e-6));
}

TEST_CASE("verify_jl edge cases") {
  ProjectionMatrix r(10, 6, 3);
  std::vector<std::vector<double>> same(3, std::vector<double>(10, 0.1));
  CHECK(verify_jl(same, r, 0.5) == 1.0);
  const double f = verify_jl({{1, 0, 0, 0, 0, 0, 0, 0, 0, 0}, {0, 1, 0, 0, 0, 0, 0, 0, 0, 0},
                              {0, 0, 1, 0, 0, 0, 0, 0, 0, 0}},
                             r, 0.5);
  CHECK(f >= 0.0);
  CHECK(f <= 1.0);
}
