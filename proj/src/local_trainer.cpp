#include "afbs/local_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <fmt/format.h>

namespace afbs {
namespace {

// Writes softmax probabilities into `z` in place and returns log-sum-exp.
double softmax_inplace(std::span<double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    s += v;
  }
  for (double& v : z) v /= s;
  return m + std::log(s);
}

struct Workspace {
  std::vector<double> hidden;
  std::vector<double> hidden_grad;
  std::vector<double> z;
};

// Forward pass for one sample; leaves logits in ws.z and tanh activations
// in ws.hidden (MLP only).
void forward(const ModelSpec& spec, std::span<const double> w, std::span<const double> x,
             Workspace& ws) {
  const auto in = static_cast<std::size_t>(spec.input_dim);
  const auto out = static_cast<std::size_t>(spec.num_classes);
  ws.z.resize(out);
  if (spec.kind == ModelKind::kSoftmax) {
    const double* W = w.data();
    const double* b = W + out * in;
    for (std::size_t c = 0; c < out; ++c) {
      double acc = b[c];
      const double* row = W + c * in;
      for (std::size_t j = 0; j < in; ++j) acc += row[j] * x[j];
      ws.z[c] = acc;
    }
    return;
  }
  const auto hid = static_cast<std::size_t>(spec.hidden);
  const double* W1 = w.data();
  const double* b1 = W1 + hid * in;
  const double* W2 = b1 + hid;
  const double* b2 = W2 + out * hid;
  ws.hidden.resize(hid);
  for (std::size_t h = 0; h < hid; ++h) {
    double acc = b1[h];
    const double* row = W1 + h * in;
    for (std::size_t j = 0; j < in; ++j) acc += row[j] * x[j];
    ws.hidden[h] = std::tanh(acc);
  }
  for (std::size_t c = 0; c < out; ++c) {
    double acc = b2[c];
    const double* row = W2 + c * hid;
    for (std::size_t h = 0; h < hid; ++h) acc += row[h] * ws.hidden[h];
    ws.z[c] = acc;
  }
}

// Adds the per-sample gradient given dL/dz (stored in ws.z as p - onehot).
void backward(const ModelSpec& spec, std::span<const double> w, std::span<const double> x,
              Workspace& ws, std::span<double> grad) {
  const auto in = static_cast<std::size_t>(spec.input_dim);
  const auto out = static_cast<std::size_t>(spec.num_classes);
  if (spec.kind == ModelKind::kSoftmax) {
    double* gW = grad.data();
    double* gb = gW + out * in;
    for (std::size_t c = 0; c < out; ++c) {
      const double g = ws.z[c];
      double* row = gW + c * in;
      for (std::size_t j = 0; j < in; ++j) row[j] += g * x[j];
      gb[c] += g;
    }
    return;
  }
  const auto hid = static_cast<std::size_t>(spec.hidden);
  const double* W2 = w.data() + hid * in + hid;
  double* gW1 = grad.data();
  double* gb1 = gW1 + hid * in;
  double* gW2 = gb1 + hid;
  double* gb2 = gW2 + out * hid;
  ws.hidden_grad.assign(hid, 0.0);
  for (std::size_t c = 0; c < out; ++c) {
    const double g = ws.z[c];
    double* row = gW2 + c * hid;
    const double* wrow = W2 + c * hid;
    for (std::size_t h = 0; h < hid; ++h) {
      row[h] += g * ws.hidden[h];
      ws.hidden_grad[h] += g * wrow[h];
    }
    gb2[c] += g;
  }
  for (std::size_t h = 0; h < hid; ++h) {
    const double a = ws.hidden[h];
    const double g = ws.hidden_grad[h] * (1.0 - a * a);
    double* row = gW1 + h * in;
    for (std::size_t j = 0; j < in; ++j) row[j] += g * x[j];
    gb1[h] += g;
  }
}

}  // namespace

ModelKind parse_model_kind(const std::string& name) {
  if (name == "softmax") return ModelKind::kSoftmax;
  if (name == "mlp") return ModelKind::kMlp;
  throw ConfigError(fmt::format("unknown model '{}' (expected softmax or mlp)", name));
}

std::string to_string(ModelKind kind) { return kind == ModelKind::kSoftmax ? "softmax" : "mlp"; }

std::size_t ModelSpec::param_count() const {
  const auto in = static_cast<std::size_t>(input_dim);
  const auto out = static_cast<std::size_t>(num_classes);
  if (kind == ModelKind::kSoftmax) return out * (in + 1);
  const auto hid = static_cast<std::size_t>(hidden);
  return hid * (in + 1) + out * (hid + 1);
}

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
  ModelParams w(spec.param_count(), 0.0);
  if (spec.kind == ModelKind::kSoftmax) return w;
  Rng rng(seed);
  const auto in = static_cast<std::size_t>(spec.input_dim);
  const auto hid = static_cast<std::size_t>(spec.hidden);
  const auto out = static_cast<std::size_t>(spec.num_classes);
  const double a1 = std::sqrt(6.0 / static_cast<double>(in + hid));
  const double a2 = std::sqrt(6.0 / static_cast<double>(hid + out));
  for (std::size_t i = 0; i < hid * in; ++i) w[i] = rng.uniform(-a1, a1);
  double* W2 = w.data() + hid * in + hid;
  for (std::size_t i = 0; i < out * hid; ++i) W2[i] = rng.uniform(-a2, a2);
  return w;
}

void logits(const ModelSpec& spec, std::span<const double> params, std::span<const double> x,
            std::span<double> out) {
  Workspace ws;
  forward(spec, params, x, ws);
  std::copy(ws.z.begin(), ws.z.end(), out.begin());
}

double loss_and_gradient(const ModelSpec& spec, std::span<const double> params,
                         const SampleSet& data, std::span<const std::size_t> rows,
                         std::span<double> grad) {
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  if (rows.empty()) return 0.0;
  Workspace ws;
  double total = 0.0;
  for (std::size_t r : rows) {
    auto x = data.row(r);
    const auto y = static_cast<std::size_t>(data.labels[r]);
    forward(spec, params, x, ws);
    const double zy = ws.z[y];
    const double lse = softmax_inplace(ws.z);
    total += lse - zy;
    if (want_grad) {
      ws.z[y] -= 1.0;
      backward(spec, params, x, ws, grad);
    }
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  if (want_grad) {
    for (double& g : grad) g *= inv;
  }
  return total * inv;
}

void validate(const TrainerConfig& cfg) {
  if (!(cfg.eta_c >= 0.0)) throw ConfigError("trainer.eta_c must be >= 0");
  if (!(cfg.decay > 0.0 && cfg.decay <= 1.0)) throw ConfigError("trainer.decay must be in (0, 1]");
  if (cfg.batch_size < 1) throw ConfigError("trainer.batch_size must be >= 1");
  if (cfg.local_steps < 0) throw ConfigError("trainer.local_steps must be >= 0");
  if (cfg.local_steps == 0 && cfg.epochs < 1) {
    throw ConfigError("trainer.epochs must be >= 1 when local_steps is unset");
  }
}

int local_step_count(const TrainerConfig& cfg, int volume) {
  if (cfg.local_steps > 0) return cfg.local_steps;
  const int per_epoch = (volume + cfg.batch_size - 1) / cfg.batch_size;
  return cfg.epochs * per_epoch;
}

Update local_train(const ModelSpec& spec, const ModelParams& model, ClientId client,
                   const ClientShard& shard, const TrainerConfig& cfg, long round, Rng& rng) {
  const std::size_t n = shard.samples.size();
  if (n == 0) throw std::invalid_argument(fmt::format("client {} has an empty shard", client));
  if (!all_finite(model)) {
    throw NumericError(fmt::format("client {} received a non-finite model", client));
  }
  const double lr = cfg.eta_c * std::pow(cfg.decay, static_cast<double>(round));
  const int steps = local_step_count(cfg, static_cast<int>(n));
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  ModelParams w = model;
  std::vector<double> grad(w.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = n;  // forces a shuffle before the first batch
  for (int step = 0; step < steps; ++step) {
    if (cursor >= n) {
      rng.shuffle(order);
      cursor = 0;
    }
    const std::size_t end = std::min(n, cursor + batch);
    std::span<const std::size_t> rows(order.data() + cursor, end - cursor);
    cursor = end;
    const double loss = loss_and_gradient(spec, w, shard.samples, rows, grad);
    if (!std::isfinite(loss)) {
      throw NumericError(fmt::format("client {}: non-finite loss at local step {}", client, step));
    }
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * grad[i];
  }

  Update u;
  u.client_id = client;
  u.birth_round = round;
  u.volume = static_cast<int>(n);
  u.delta.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) u.delta[i] = model[i] - w[i];
  return u;
}

Evaluation evaluate(const ModelSpec& spec, const ModelParams& model, const SampleSet& test) {
  Evaluation ev;
  if (test.size() == 0) return ev;
  Workspace ws;
  std::size_t correct = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    forward(spec, model, test.row(i), ws);
    const auto y = static_cast<std::size_t>(test.labels[i]);
    // First maximum wins on ties.
    const auto pred = static_cast<std::size_t>(
        std::distance(ws.z.begin(), std::max_element(ws.z.begin(), ws.z.end())));
    if (pred == y) ++correct;
    const double zy = ws.z[y];
    total += softmax_inplace(ws.z) - zy;
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  ev.loss = total / static_cast<double>(test.size());
  return ev;
}

}  // namespace afbs
