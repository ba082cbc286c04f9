#include <algorithm>
#include <memory>

#include "doctest.h"

#include "afbs/strategies.hpp"
#include "support/oracles.hpp"

using namespace afbs;

namespace {

Update make_update(ClientId id, int volume, long birth, int cluster, ModelParams delta) {
  Update u;
  u.client_id = id;
  u.volume = volume;
  u.birth_round = birth;
  u.cluster_id = cluster;
  u.delta = std::move(delta);
  return u;
}

std::shared_ptr<const ClusterAssignment> clusters(int k, int clients) {
  std::vector<ClientId> ids;
  std::vector<int> labels;
  for (int i = 0; i < clients; ++i) {
    ids.push_back(i);
    labels.push_back(i % k);
  }
  return std::make_shared<ClusterAssignment>(ids, labels,
                                             std::vector<std::vector<double>>(
                                                 static_cast<std::size_t>(k), {0.0}));
}

std::vector<Update> random_buffer(Rng& rng, long round, int k) {
  const auto n = 1 + rng.uniform_index(10);
  std::vector<Update> buf;
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = static_cast<ClientId>(rng.uniform_index(20));
    const int v = 1 + static_cast<int>(rng.uniform_index(300));
    const long birth = round - static_cast<long>(rng.uniform_index(8));
    buf.push_back(make_update(id, v, birth, static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(k))), {0.0}));
  }
  return buf;
}

}  // namespace

TEST_CASE("score and decay values") {
  CHECK(score(100, 9) == 1.0);
  CHECK(score(36, 5) == 1.0);
  CHECK(staleness_decay(3) == 0.5);
  CHECK(staleness_decay(0) == 1.0);
}

TEST_CASE("strategy config validation") {
  StrategyConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  cfg.name = "fedprox";
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = {};
  cfg.buffer_size = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = {};
  cfg.async_mix_alpha = 1.5;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  CHECK(parse_decay_mode("per_gradient") == DecayMode::kPerGradient);
  CHECK_THROWS_AS(parse_decay_mode("none"), ConfigError);
}

TEST_CASE("keep rule on a hand-built buffer") {
  // Cluster max is client 0 (V=100, tau=0). Client 1 is smaller and staler.
  ClusterAssignment one({0, 1, 2}, {0, 0, 0}, {{0.0}});
  std::vector<Update> buf{make_update(0, 100, 5, 0, {0.0}), make_update(1, 50, 0, 0, {0.0}),
                          make_update(2, 120, 0, 0, {0.0})};
  Rng rng(1);
  const auto sel = gradient_select(buf, one, 5, /*rescue=*/false, rng);
  CHECK(sel.kept == std::vector<std::size_t>{0, 2});
  CHECK(sel.dropped == std::vector<std::size_t>{1});
  CHECK(sel.cluster_max == std::vector<std::size_t>{0});
}

TEST_CASE("rescue probability is the score ratio") {
  ClusterAssignment one({0, 1}, {0, 0}, {{0.0}});
  std::vector<Update> buf{make_update(0, 100, 5, 0, {0.0}), make_update(1, 50, 0, 0, {0.0})};
  Rng rng(2);
  const int trials = 100000;
  int rescued = 0;
  for (int t = 0; t < trials; ++t) rescued += gradient_select(buf, one, 5, true, rng).rescued.size() == 1;
  const double p = (50.0 / 36.0) / 100.0;
  CHECK(static_cast<double>(rescued) / trials == doctest::Approx(p).epsilon(0.12));
}

TEST_CASE("tie on score goes to the lowest client id") {
  ClusterAssignment one({0, 1, 2, 3}, {0, 0, 0, 0}, {{0.0}});
  // Scores 4/(1+1)^2 = 1 and 1/(0+1)^2 = 1 tie; client 1 wins over client 3.
  std::vector<Update> buf{make_update(3, 4, 0, 0, {0.0}), make_update(1, 1, 1, 0, {0.0})};
  Rng rng(1);
  const auto sel = gradient_select(buf, one, 1, false, rng);
  CHECK(sel.cluster_max == std::vector<std::size_t>{1});
  CHECK(sel.kept.size() == 2);
}

TEST_CASE("selection agrees with the brute-force enumerator") {
  Rng gen(99);
  for (int trial = 0; trial < 2000; ++trial) {
    const int k = 1 + static_cast<int>(gen.uniform_index(3));
    const long round = 10;
    const auto buf = random_buffer(gen, round, k);
    const auto assignment = clusters(k, 20);
    for (bool rescue : {false, true}) {
      Rng a(static_cast<std::uint64_t>(trial)), b(static_cast<std::uint64_t>(trial));
      const auto sel = gradient_select(buf, *assignment, round, rescue, a);
      const auto ref = oracle::brute_force_select(buf, round, rescue, [&] { return b.uniform(); });
      std::vector<bool> kept(buf.size(), false), rescued(buf.size(), false);
      for (auto i : sel.kept) kept[i] = true;
      for (auto i : sel.rescued) rescued[i] = true;
      REQUIRE(kept == ref.keep);
      REQUIRE(rescued == ref.rescued);
    }
  }
}

TEST_CASE("every represented cluster keeps its maximum") {
  Rng gen(5);
  for (int trial = 0; trial < 500; ++trial) {
    const auto buf = random_buffer(gen, 10, 3);
    const auto sel = gradient_select(buf, *clusters(3, 20), 10, false, gen);
    for (auto m : sel.cluster_max) CHECK(std::find(sel.kept.begin(), sel.kept.end(), m) != sel.kept.end());
    std::vector<bool> has(3, false), kept(3, false);
    for (const auto& u : buf) has[static_cast<std::size_t>(u.cluster_id)] = true;
    for (auto i : sel.kept) kept[static_cast<std::size_t>(buf[i].cluster_id)] = true;
    CHECK(has == kept);
    CHECK(sel.kept.size() + sel.dropped.size() == buf.size());
  }
}

TEST_CASE("a dropped entry is dominated in both volume and staleness") {
  Rng gen(6);
  for (int trial = 0; trial < 500; ++trial) {
    const long round = 10;
    const auto buf = random_buffer(gen, round, 2);
    const auto sel = gradient_select(buf, *clusters(2, 20), round, false, gen);
    for (auto x : sel.dropped) {
      bool dominated = false;
      for (const auto& m : buf) {
        if (m.cluster_id == buf[x].cluster_id && m.volume > buf[x].volume &&
            m.birth_round > buf[x].birth_round)
          dominated = true;
      }
      CHECK(dominated);
    }
  }
}

TEST_CASE("selection input errors") {
  ClusterAssignment one({0}, {0}, {{0.0}});
  Rng rng(1);
  CHECK_THROWS_AS(gradient_select({}, one, 0, true, rng), InvariantViolation);
  std::vector<Update> bad{make_update(0, 1, 0, 3, {0.0})};
  CHECK_THROWS_AS(gradient_select(bad, one, 0, true, rng), StrategyError);
  std::vector<Update> future{make_update(0, 1, 4, 0, {0.0})};
  CHECK_THROWS_AS(gradient_select(future, one, 2, true, rng), InvariantViolation);
  CHECK_THROWS_AS(AfbsStrategy(StrategyConfig{}, nullptr), StrategyError);
}

TEST_CASE("buffered aggregation arithmetic") {
  StrategyConfig cfg;
  cfg.eta_g = 2.0;
  std::vector<Update> ups{make_update(0, 1, 1, 0, {4.0, 0.0}), make_update(1, 1, 0, 0, {0.0, 8.0})};
  // tau = {3, 4}; uniform lambda = 1/2.
  auto w = aggregate_buffer(ups, {1.0, 1.0}, 4, cfg);
  CHECK(w[0] == doctest::Approx(1.0 - 2.0 * 0.5 * 2.0));
  CHECK(w[1] == doctest::Approx(1.0 - 2.0 * 0.5 * 4.0));
  cfg.decay_mode = DecayMode::kPerGradient;
  w = aggregate_buffer(ups, {1.0, 1.0}, 4, cfg);
  CHECK(w[0] == doctest::Approx(1.0 - 2.0 * 0.5 * 4.0 * 0.5));
  CHECK(w[1] == doctest::Approx(1.0 - 2.0 * 0.5 * 8.0 / std::sqrt(5.0)));
}

TEST_CASE("fedavg is the volume-weighted mean") {
  StrategyConfig cfg;
  std::vector<Update> ups{make_update(0, 1, 0, 0, {3.0}), make_update(1, 3, 0, 0, {7.0})};
  CHECK(fedavg_round(ups, {10.0}, cfg)[0] == doctest::Approx(10.0 - 6.0));
}

TEST_CASE("fedasync mixing extremes") {
  StrategyConfig cfg;
  auto base = std::make_shared<const ModelParams>(ModelParams{5.0});
  Update u = make_update(0, 1, 0, 0, {1.0});
  u.base_model = base;
  cfg.async_mix_alpha = 0.0;
  CHECK(fedasync_mix(u, {9.0}, 3, cfg)[0] == 9.0);
  cfg.async_mix_alpha = 1.0;
  CHECK(fedasync_mix(u, {9.0}, 0, cfg)[0] == 4.0);
  // tau = 3 -> lambda = 0.5
  CHECK(fedasync_mix(u, {8.0}, 3, cfg)[0] == doctest::Approx(6.0));
  u.base_model.reset();
  CHECK_THROWS_AS(fedasync_mix(u, {9.0}, 0, cfg), StrategyError);
}

TEST_CASE("fedfa aggregates on every arrival once full") {
  StrategyConfig cfg;
  cfg.name = "fedfa";
  cfg.buffer_size = 3;
  FedFaStrategy fa(cfg);
  ServerState state({0.0}, 1, 10);
  int aggregations = 0;
  const int m = 8;
  for (int i = 0; i < m; ++i) {
    if (fa.on_arrival(make_update(i, 1, state.round(), 0, {1.0}), state)) ++aggregations;
  }
  CHECK(aggregations == m - 3 + 1);
  REQUIRE(fa.window().size() == 3);
  CHECK(fa.window()[0].client_id == 5);
  CHECK(fa.window()[2].client_id == 7);
}

TEST_CASE("fedbuff fires every C arrivals") {
  StrategyConfig cfg;
  cfg.name = "fedbuff";
  cfg.buffer_size = 4;
  FedBuffStrategy fb(cfg);
  ServerState state({0.0}, 1, 10);
  int aggregations = 0;
  for (int i = 0; i < 10; ++i)
    if (fb.on_arrival(make_update(i, 1, state.round(), 0, {1.0}), state)) ++aggregations;
  CHECK(aggregations == 2);
  CHECK(fb.buffered() == 2);
  CHECK(state.round() == 2);
}

TEST_CASE("afbs equals fedbuff on fresh buffers") {
  StrategyConfig cfg;
  cfg.buffer_size = 3;
  auto assignment = clusters(2, 10);
  cfg.name = "afbs";
  AfbsStrategy afbs(cfg, assignment);
  cfg.name = "fedbuff";
  FedBuffStrategy fb(cfg);
  ServerState sa({0.5, -0.5}, 1, 10), sb({0.5, -0.5}, 1, 10);
  Rng rng(3);
  for (int i = 0; i < 12; ++i) {
    const ModelParams d{rng.normal(), rng.normal()};
    const int v = 1 + static_cast<int>(rng.uniform_index(100));
    afbs.on_arrival(make_update(i % 10, v, sa.round(), i % 2, d), sa);
    fb.on_arrival(make_update(i % 10, v, sb.round(), i % 2, d), sb);
    CHECK(sa.model() == sb.model());
  }
}

TEST_CASE("fedavg waits for the cohort") {
  StrategyConfig cfg;
  cfg.name = "fedavg";
  FedAvgStrategy avg(cfg);
  ServerState state({0.0}, 1, 4);
  CHECK_FALSE(avg.on_arrival(make_update(0, 1, 0, 0, {2.0}), state));
  CHECK_FALSE(avg.on_arrival(make_update(1, 1, 0, 0, {4.0}), state));
  const auto rec = avg.on_cohort_complete(state);
  REQUIRE(rec);
  CHECK(rec->summations == 2);
  CHECK(state.model()[0] == doctest::Approx(-3.0));
  CHECK_FALSE(avg.on_cohort_complete(state));
}

TEST_CASE("make_strategy covers every name") {
  auto assignment = clusters(1, 2);
  for (const auto& name : strategy_names()) {
    StrategyConfig cfg;
    cfg.name = name;
    CHECK(make_strategy(cfg, assignment)->name() == name);
  }
}
