#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "afbs/common.hpp"
#include "afbs/update.hpp"

namespace afbs {

/// Server-side mutable state: the global model, the aggregation counter and
/// the set of clients currently training.
///
/// Random streams are split by purpose so that client dispatch never depends
/// on what a strategy draws; two strategies run from the same seed see the
/// same event trace.
class ServerState {
 public:
  ServerState(ModelParams initial_model, std::uint64_t seed, int num_clients);

  const ModelParams& model() const { return *model_; }
  // Global round = number of aggregations performed so far.
  long round() const { return round_; }
  std::shared_ptr<const ModelParams> snapshot() const { return model_; }

  // Installs an aggregated model and advances the round counter. Throws
  // NumericError if the model is not finite.
  void commit(ModelParams next);

  bool in_flight(ClientId c) const { return busy_[static_cast<std::size_t>(c)]; }
  int in_flight_count() const { return in_flight_count_; }
  void mark_in_flight(ClientId c);
  void mark_idle(ClientId c);
  int num_clients() const { return static_cast<int>(busy_.size()); }

  Rng& dispatch_rng() { return dispatch_rng_; }
  Rng& selection_rng() { return selection_rng_; }
  Rng& jitter_rng() { return jitter_rng_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::shared_ptr<const ModelParams> model_;
  long round_ = 0;
  std::vector<bool> busy_;
  int in_flight_count_ = 0;
  std::uint64_t seed_;
  Rng dispatch_rng_;
  Rng selection_rng_;
  Rng jitter_rng_;
};

// tau = current_round - birth_round. A negative value is an internal
// invariant violation and aborts the run.
long staleness(const Update& update, long current_round);

}  // namespace afbs
