#pragma once

#include <cstdint>
#include <vector>

#include "afbs/data_gen.hpp"
#include "afbs/local_trainer.hpp"
#include "afbs/metrics_report.hpp"
#include "afbs/server_state.hpp"
#include "afbs/strategies.hpp"

namespace afbs {

/// Simulated seconds. Only moves forward, and only to the time of the
/// event being processed.
class VirtualClock {
 public:
  double now() const { return now_; }
  void advance_to(double t);

 private:
  double now_ = 0.0;
};

/// A client finishing local training.
struct Event {
  double fire_at = 0.0;
  ClientId client_id = 0;
  std::uint64_t seq = 0;
  Update update;
};

// Strict weak order on (fire_at, client_id, seq).
bool fires_before(const Event& a, const Event& b);

/// Future-event list ordered by fires_before.
class EventQueue {
 public:
  void push(Event e);
  Event pop();
  const Event& top() const { return heap_.front(); }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }

 private:
  std::vector<Event> heap_;
};

struct ClientProfile {
  ClientId id = 0;
  const ClientShard* shard = nullptr;
  double latency = 0.0;  // virtual seconds per local-training job
  int cluster_id = 0;
};

/// Everything a client job needs besides the server state.
struct TrainingContext {
  ModelSpec model;
  TrainerConfig trainer;
  std::uint64_t seed = 0;
  double latency_jitter = 0.0;  // multiplicative, Uniform(1 - j, 1 + j); 0 disables
};

/// Sends the current global model to `client`, runs its local training and
/// schedules the resulting ClientFinish event at now + latency. `seq` is the
/// global dispatch counter and seeds the client's shuffling stream.
Event dispatch_client(ServerState& state, const ClientProfile& client, const VirtualClock& clock,
                      const TrainingContext& ctx, std::uint64_t seq);

struct SimulationSetup {
  const FederatedDataset* dataset = nullptr;
  std::vector<ClientProfile> clients;
  TrainingContext training;
  ModelParams initial_model;
  int max_in_flight = 120;  // M_active
  double horizon = 0.0;
  MetricsSchedule metrics;
  std::uint64_t seed = 0;
  bool record_trace = false;
  bool record_trajectory = false;
};

struct ArrivalRecord {
  double time = 0.0;
  ClientId client_id = 0;
  long birth_round = 0;
  long staleness = 0;

  bool operator==(const ArrivalRecord&) const = default;
};

struct SimulationResult {
  std::vector<TimelineEntry> timeline;
  std::vector<WorkRecord> work;
  std::vector<std::int64_t> handle_time_ns;
  std::vector<ArrivalRecord> arrivals;  // filled when record_trace is set
  std::vector<ModelParams> trajectory;  // model after each aggregation, when requested
  std::size_t arrival_count = 0;
  std::size_t dispatch_count = 0;
  long final_round = 0;
  double final_clock = 0.0;
  int max_observed_in_flight = 0;
  ModelParams final_model;
};

/// Drives `strategy` over the virtual-time axis until no event with
/// fire_at <= horizon remains. Single-threaded; results depend only on the
/// setup and the seed.
SimulationResult simulate(const SimulationSetup& setup, AggregationStrategy& strategy);

}  // namespace afbs
