#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numeric>

#include "doctest.h"

#include "afbs/data_gen.hpp"
#include "support/oracles.hpp"

using namespace afbs;

namespace {

DataGenParams small(int clients = 100) {
  DataGenParams p;
  p.num_clients = clients;
  p.num_clusters = 5;
  p.num_labels = 10;
  p.feature_dim = 10;
  return p;
}

double tv(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

}  // namespace

TEST_CASE("generator is deterministic per seed") {
  const auto a = generate(small(), 1);
  const auto b = generate(small(), 1);
  const auto c = generate(small(), 2);
  CHECK(a.checksum() == b.checksum());
  CHECK(a.checksum() != c.checksum());
  CHECK(a.num_clients() == 100);
}

TEST_CASE("label distributions sum to one") {
  const auto ds = generate(small(), 3);
  for (const auto& shard : ds.clients) {
    const auto p = label_distribution(shard);
    REQUIRE(p.size() == 10);
    CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) <= 1e-12);
    int total = std::accumulate(shard.label_histogram.begin(), shard.label_histogram.end(), 0);
    CHECK(total == shard.volume());
  }
}

TEST_CASE("empty shard has no distribution") {
  ClientShard empty;
  empty.label_histogram.assign(4, 0);
  CHECK_THROWS(label_distribution(empty));
}

TEST_CASE("zero volume sigma gives the base volume") {
  auto p = small(20);
  p.volume_sigma = 0.0;
  const auto ds = generate(p, 4);
  for (const auto& shard : ds.clients) CHECK(shard.volume() == 200);
}

TEST_CASE("volumes are at least one") {
  auto p = small(200);
  p.volume_sigma = 3.0;
  p.base_volume = 2;
  const auto ds = generate(p, 5);
  for (const auto& shard : ds.clients) CHECK(shard.volume() >= 1);
}

TEST_CASE("large alpha is close to uniform") {
  auto p = small(50);
  p.alpha = 1e4;
  p.volume_sigma = 0.0;
  p.base_volume = 2000;
  const auto ds = generate(p, 6);
  for (const auto& shard : ds.clients) {
    // 9 degrees of freedom; 27.88 is the 0.999 quantile.
    CHECK(oracle::chi_square_uniform(shard.label_histogram) < 27.88);
  }
}

TEST_CASE("small alpha concentrates mass") {
  const auto ds = generate(small(), 7);
  int concentrated = 0;
  for (const auto& dist : ds.cluster_distributions) {
    auto sorted = dist;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    if (sorted[0] + sorted[1] + sorted[2] >= 0.8) ++concentrated;
  }
  CHECK(concentrated >= 4);
}

TEST_CASE("clients share their cluster's distribution") {
  auto p = small();
  p.volume_sigma = 0.0;
  p.base_volume = 1000;
  const auto ds = generate(p, 8);
  double within = 0.0, across = 0.0;
  int nw = 0, na = 0;
  for (int i = 0; i < ds.num_clients(); ++i) {
    for (int j = i + 1; j < ds.num_clients(); ++j) {
      const double d = tv(label_distribution(ds.clients[static_cast<std::size_t>(i)]),
                          label_distribution(ds.clients[static_cast<std::size_t>(j)]));
      if (ds.cluster_of[static_cast<std::size_t>(i)] == ds.cluster_of[static_cast<std::size_t>(j)]) {
        within += d;
        ++nw;
      } else {
        across += d;
        ++na;
      }
    }
  }
  CHECK(within / nw < 0.1);
  CHECK(within / nw < across / na);
}

TEST_CASE("round-robin cluster membership") {
  const auto ds = generate(small(12), 9);
  for (int i = 0; i < 12; ++i) CHECK(ds.cluster_of[static_cast<std::size_t>(i)] == i % 5);
}

TEST_CASE("test split is non-empty and labelled in range") {
  const auto ds = generate(small(), 10);
  CHECK(ds.test.size() > 0);
  for (int y : ds.test.labels) {
    CHECK(y >= 0);
    CHECK(y < 10);
  }
}

TEST_CASE("invalid parameters are rejected") {
  auto p = small();
  p.alpha = 0.0;
  CHECK_THROWS_AS(generate(p, 1), ConfigError);
  p = small();
  p.num_clusters = 0;
  CHECK_THROWS_AS(generate(p, 1), ConfigError);
}

TEST_CASE("dataset json round trip") {
  const auto ds = generate(small(10), 11);
  const auto path = (std::filesystem::temp_directory_path() / "afbs_ds_roundtrip.json").string();
  save_dataset_json(ds, path);
  const auto back = load_dataset_json(path);
  CHECK(back.num_clients() == ds.num_clients());
  CHECK(back.cluster_of == ds.cluster_of);
  for (std::size_t i = 0; i < ds.clients.size(); ++i) {
    CHECK(back.clients[i].samples.labels == ds.clients[i].samples.labels);
    CHECK(back.clients[i].samples.features == ds.clients[i].samples.features);
  }
  CHECK(back.test.features == ds.test.features);
  std::filesystem::remove(path);
}
