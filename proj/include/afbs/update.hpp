#pragma once

#include <memory>

#include "afbs/common.hpp"

namespace afbs {

/// A client's accumulated pseudo-gradient plus provenance.
///
/// delta = w_received - w_final, so the server step is w <- w - eta_g * delta.
/// Staleness is computed when the update is consumed, never stored.
struct Update {
  ModelParams delta;
  ClientId client_id = 0;
  long birth_round = 0;
  int volume = 1;  // V, sample count of the source client
  int cluster_id = 0;
  double arrival_time = 0.0;
  // Global model the client trained from; shared between clients dispatched
  // in the same round.
  std::shared_ptr<const ModelParams> base_model;
};

}  // namespace afbs
