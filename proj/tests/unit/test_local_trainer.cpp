#include <cmath>
#include <numeric>

#include "doctest.h"

#include "afbs/data_gen.hpp"
#include "afbs/local_trainer.hpp"
#include "support/oracles.hpp"

using namespace afbs;

namespace {

ClientShard random_shard(int n, int features, int classes, std::uint64_t seed) {
  Rng rng(seed);
  ClientShard s;
  s.samples.feature_dim = features;
  s.label_histogram.assign(static_cast<std::size_t>(classes), 0);
  std::vector<double> x(static_cast<std::size_t>(features));
  for (int i = 0; i < n; ++i) {
    for (auto& v : x) v = rng.normal();
    const int y = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(classes)));
    s.samples.push_back(x, y);
    ++s.label_histogram[static_cast<std::size_t>(y)];
  }
  return s;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), 0);
  return r;
}

}  // namespace

TEST_CASE("parameter counts") {
  CHECK(ModelSpec{ModelKind::kSoftmax, 10, 3, 32}.param_count() == 33);
  CHECK(ModelSpec{ModelKind::kMlp, 10, 3, 4}.param_count() == 4 * 10 + 4 + 3 * 4 + 3);
  CHECK(parse_model_kind("mlp") == ModelKind::kMlp);
  CHECK(to_string(ModelKind::kSoftmax) == "softmax");
  CHECK_THROWS_AS(parse_model_kind("cnn"), ConfigError);
}

TEST_CASE("softmax single-sample gradient at zero") {
  ModelSpec spec{ModelKind::kSoftmax, 2, 3, 0};
  SampleSet data;
  data.feature_dim = 2;
  const double x[2] = {2.0, -1.0};
  data.push_back(x, 1);
  std::vector<double> w(spec.param_count(), 0.0), g(w.size());
  const std::size_t row = 0;
  const double loss = loss_and_gradient(spec, w, data, std::span(&row, 1), g);
  CHECK(loss == doctest::Approx(std::log(3.0)));
  const double third = 1.0 / 3.0;
  const std::vector<double> expected{third * 2, -third, (third - 1) * 2, -(third - 1),
                                     third * 2, -third, third, third - 1, third};
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(expected[i]));
}

TEST_CASE("analytic gradient matches finite differences") {
  for (auto kind : {ModelKind::kSoftmax, ModelKind::kMlp}) {
    ModelSpec spec{kind, 5, 4, 6};
    const auto shard = random_shard(30, 5, 4, 2);
    Rng rng(3);
    ModelParams w(spec.param_count());
    for (auto& v : w) v = 0.5 * rng.normal();
    const auto rows = all_rows(shard.samples.size());
    std::vector<double> g(w.size());
    loss_and_gradient(spec, w, shard.samples, rows, g);
    const auto num = oracle::numeric_gradient(spec, w, shard.samples, rows);
    CHECK(oracle::relative_error(g, num) <= 1e-6);
  }
}

TEST_CASE("zero learning rate leaves the model unchanged") {
  ModelSpec spec{ModelKind::kMlp, 5, 3, 4};
  const auto shard = random_shard(20, 5, 3, 4);
  TrainerConfig cfg;
  cfg.eta_c = 0.0;
  Rng rng(1);
  const auto w = init_params(spec, 9);
  const auto u = local_train(spec, w, 3, shard, cfg, 7, rng);
  CHECK(u.client_id == 3);
  CHECK(u.birth_round == 7);
  CHECK(u.volume == 20);
  for (double d : u.delta) CHECK(d == 0.0);
}

TEST_CASE("one full-batch step equals lr times the gradient") {
  ModelSpec spec{ModelKind::kSoftmax, 5, 3, 0};
  const auto shard = random_shard(16, 5, 3, 5);
  TrainerConfig cfg;
  cfg.eta_c = 0.1;
  cfg.decay = 0.5;
  cfg.local_steps = 1;
  cfg.batch_size = 16;
  Rng rng(2);
  const auto w = init_params(spec, 1);
  const auto u = local_train(spec, w, 0, shard, cfg, 2, rng);
  std::vector<double> g(w.size());
  loss_and_gradient(spec, w, shard.samples, all_rows(16), g);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(u.delta[i] == doctest::Approx(0.025 * g[i]));
}

TEST_CASE("local training is deterministic for a seed") {
  ModelSpec spec{ModelKind::kSoftmax, 5, 3, 0};
  const auto shard = random_shard(50, 5, 3, 6);
  TrainerConfig cfg;
  Rng a(8), b(8);
  const auto w = init_params(spec, 1);
  CHECK(local_train(spec, w, 0, shard, cfg, 0, a).delta ==
        local_train(spec, w, 0, shard, cfg, 0, b).delta);
}

TEST_CASE("step count") {
  TrainerConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 10;
  CHECK(local_step_count(cfg, 25) == 6);
  cfg.local_steps = 4;
  CHECK(local_step_count(cfg, 25) == 4);
  cfg.batch_size = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("non-finite model is rejected") {
  ModelSpec spec{ModelKind::kSoftmax, 5, 3, 0};
  const auto shard = random_shard(5, 5, 3, 7);
  ModelParams w(spec.param_count(), 0.0);
  w[0] = std::nan("");
  Rng rng(1);
  CHECK_THROWS_AS(local_train(spec, w, 0, shard, TrainerConfig{}, 0, rng), NumericError);
}

TEST_CASE("evaluation bounds") {
  ModelSpec spec{ModelKind::kSoftmax, 5, 3, 0};
  const auto shard = random_shard(40, 5, 3, 8);
  const auto ev = evaluate(spec, ModelParams(spec.param_count(), 0.0), shard.samples);
  CHECK(ev.accuracy >= 0.0);
  CHECK(ev.accuracy <= 1.0);
  CHECK(ev.loss == doctest::Approx(std::log(3.0)));
}

TEST_CASE("training reduces loss on separable data") {
  const auto ds = oracle::tiny_dataset(1, 100, 3);
  ModelSpec spec{ModelKind::kSoftmax, 2, 2, 0};
  TrainerConfig cfg;
  cfg.eta_c = 0.5;
  cfg.epochs = 10;
  cfg.batch_size = 10;
  Rng rng(1);
  const ModelParams w0(spec.param_count(), 0.0);
  const auto u = local_train(spec, w0, 0, ds.clients[0], cfg, 0, rng);
  ModelParams w1(w0.size());
  for (std::size_t i = 0; i < w1.size(); ++i) w1[i] = w0[i] - u.delta[i];
  CHECK(evaluate(spec, w1, ds.test).loss < evaluate(spec, w0, ds.test).loss);
  CHECK(evaluate(spec, w1, ds.test).accuracy >= 0.9);
}
