#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "afbs/common.hpp"
#include "afbs/data_gen.hpp"
#include "afbs/update.hpp"

namespace afbs {

enum class ModelKind { kSoftmax, kMlp };

ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);

/// Architecture of the flat parameter vector.
///
/// Softmax regression: W (classes x inputs) row-major, then b (classes).
/// MLP: W1 (hidden x inputs), b1 (hidden), W2 (classes x hidden), b2 (classes),
/// with tanh on the hidden layer.
struct ModelSpec {
  ModelKind kind = ModelKind::kSoftmax;
  int input_dim = 0;
  int num_classes = 0;
  int hidden = 32;

  std::size_t param_count() const;
};

// Softmax starts at zero; the MLP uses a seeded Xavier-uniform draw.
ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);

/// Mean softmax cross-entropy over `rows` of `data`. When `grad` is
/// non-empty it is overwritten with the gradient of that mean.
double loss_and_gradient(const ModelSpec& spec, std::span<const double> params,
                         const SampleSet& data, std::span<const std::size_t> rows,
                         std::span<double> grad);

void logits(const ModelSpec& spec, std::span<const double> params, std::span<const double> x,
            std::span<double> out);

struct TrainerConfig {
  double eta_c = 0.01;
  double decay = 0.999;
  int epochs = 5;
  int batch_size = 64;
  // When positive, run exactly this many mini-batch steps instead of epochs.
  int local_steps = 0;
};

void validate(const TrainerConfig& cfg);

// Q for a shard: local_steps if set, otherwise epochs * ceil(V / batch_size).
int local_step_count(const TrainerConfig& cfg, int volume);

/// Mini-batch SGD from `model` on the client's shard at rate
/// eta_c * decay^round. Returns delta = model - trained, birth_round = round.
Update local_train(const ModelSpec& spec, const ModelParams& model, ClientId client,
                   const ClientShard& shard, const TrainerConfig& cfg, long round, Rng& rng);

struct Evaluation {
  double accuracy = 0.0;
  double loss = 0.0;
};

Evaluation evaluate(const ModelSpec& spec, const ModelParams& model, const SampleSet& test);

}  // namespace afbs
