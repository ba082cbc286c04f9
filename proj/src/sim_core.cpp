#include "afbs/sim_core.hpp"

#include <algorithm>
#include <chrono>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace afbs {
namespace {

enum Stream : std::uint64_t { kDispatch = 200, kSelection = 201, kJitter = 202, kTraining = 203 };

// std heap algorithms build a max-heap; invert to pop the earliest event.
struct LaterEvent {
  bool operator()(const Event& a, const Event& b) const { return fires_before(b, a); }
};

}  // namespace

ServerState::ServerState(ModelParams initial_model, std::uint64_t seed, int num_clients)
    : model_(std::make_shared<const ModelParams>(std::move(initial_model))),
      busy_(static_cast<std::size_t>(num_clients), false),
      seed_(seed),
      dispatch_rng_(mix_seed(seed, kDispatch)),
      selection_rng_(mix_seed(seed, kSelection)),
      jitter_rng_(mix_seed(seed, kJitter)) {}

void ServerState::commit(ModelParams next) {
  if (!all_finite(next)) {
    throw NumericError(fmt::format("aggregation at round {} produced a non-finite model", round_));
  }
  model_ = std::make_shared<const ModelParams>(std::move(next));
  ++round_;
}

void ServerState::mark_in_flight(ClientId c) {
  const auto i = static_cast<std::size_t>(c);
  if (busy_.at(i)) throw InvariantViolation(fmt::format("client {} dispatched while in flight", c));
  busy_[i] = true;
  ++in_flight_count_;
}

void ServerState::mark_idle(ClientId c) {
  const auto i = static_cast<std::size_t>(c);
  if (!busy_.at(i)) {
    throw InvariantViolation(fmt::format("client {} finished without being dispatched", c));
  }
  busy_[i] = false;
  --in_flight_count_;
}

long staleness(const Update& update, long current_round) {
  if (update.birth_round > current_round) {
    throw InvariantViolation(fmt::format("update from client {} born at round {} after round {}",
                                         update.client_id, update.birth_round, current_round));
  }
  return current_round - update.birth_round;
}

void VirtualClock::advance_to(double t) {
  if (t < now_) {
    throw InvariantViolation(fmt::format("virtual clock moving backwards: {} -> {}", now_, t));
  }
  now_ = t;
}

bool fires_before(const Event& a, const Event& b) {
  if (a.fire_at != b.fire_at) return a.fire_at < b.fire_at;
  if (a.client_id != b.client_id) return a.client_id < b.client_id;
  return a.seq < b.seq;
}

void EventQueue::push(Event e) {
  heap_.push_back(std::move(e));
  std::push_heap(heap_.begin(), heap_.end(), LaterEvent{});
}

Event EventQueue::pop() {
  std::pop_heap(heap_.begin(), heap_.end(), LaterEvent{});
  Event e = std::move(heap_.back());
  heap_.pop_back();
  return e;
}

Event dispatch_client(ServerState& state, const ClientProfile& client, const VirtualClock& clock,
                      const TrainingContext& ctx, std::uint64_t seq) {
  if (state.in_flight(client.id)) {
    throw InvariantViolation(fmt::format("client {} is already in flight", client.id));
  }
  Rng rng(mix_seed(ctx.seed, kTraining, static_cast<std::uint64_t>(client.id), seq));
  Update u = local_train(ctx.model, state.model(), client.id, *client.shard, ctx.trainer,
                         state.round(), rng);
  u.cluster_id = client.cluster_id;
  u.base_model = state.snapshot();

  double latency = client.latency;
  if (ctx.latency_jitter > 0.0) {
    latency *= state.jitter_rng().uniform(1.0 - ctx.latency_jitter, 1.0 + ctx.latency_jitter);
  }
  state.mark_in_flight(client.id);
  Event e;
  e.fire_at = clock.now() + latency;
  e.client_id = client.id;
  e.seq = seq;
  e.update = std::move(u);
  return e;
}

SimulationResult simulate(const SimulationSetup& setup, AggregationStrategy& strategy) {
  if (setup.dataset == nullptr) throw ConfigError("simulation needs a dataset");
  if (setup.clients.empty()) throw ConfigError("simulation needs at least one client");
  if (setup.max_in_flight < 1) throw ConfigError("M_active must be >= 1");
  if (!(setup.horizon >= 0.0)) throw ConfigError("horizon must be >= 0");
  for (std::size_t i = 0; i < setup.clients.size(); ++i) {
    const auto& c = setup.clients[i];
    if (c.id != static_cast<ClientId>(i)) throw ConfigError("client ids must be 0..N-1 in order");
    if (c.shard == nullptr || c.shard->volume() < 1) {
      throw ConfigError(fmt::format("client {} has no data", c.id));
    }
    if (!(c.latency >= 0.0)) throw ConfigError(fmt::format("client {} has negative latency", c.id));
  }

  const int n = static_cast<int>(setup.clients.size());
  ServerState state(setup.initial_model, setup.seed, n);
  VirtualClock clock;
  EventQueue queue;
  SimulationResult result;
  std::uint64_t seq = 0;

  std::vector<ClientId> idle(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idle[static_cast<std::size_t>(i)] = i;

  auto dispatch_one = [&] {
    const auto pick = static_cast<std::ptrdiff_t>(state.dispatch_rng().uniform_index(idle.size()));
    const ClientId id = idle[static_cast<std::size_t>(pick)];
    idle.erase(idle.begin() + pick);
    queue.push(dispatch_client(state, setup.clients[static_cast<std::size_t>(id)], clock,
                               setup.training, seq++));
    result.max_observed_in_flight = std::max(result.max_observed_in_flight, state.in_flight_count());
  };
  auto refill = [&] {
    while (state.in_flight_count() < setup.max_in_flight && !idle.empty()) dispatch_one();
  };

  const auto grid = sample_times(setup.metrics, setup.horizon);
  std::size_t next_sample = 0;
  auto sample = [&](double t) {
    const auto ev = evaluate(setup.training.model, state.model(), setup.dataset->test);
    result.timeline.push_back({t, ev.accuracy, ev.loss, state.round()});
    spdlog::debug("t={} round={} acc={:.4f} loss={:.4f}", t, state.round(), ev.accuracy, ev.loss);
  };
  auto record = [&](const std::optional<AggregationRecord>& rec, std::int64_t ns) {
    if (!rec) return;
    WorkRecord w;
    w.round = state.round();
    w.virtual_time = clock.now();
    w.buffered = rec->buffered;
    w.aggregated = rec->aggregated;
    w.summations = rec->summations;
    w.dropped = rec->dropped;
    w.rescued = rec->rescued;
    result.work.push_back(w);
    result.handle_time_ns.push_back(ns);
    if (setup.record_trajectory) result.trajectory.push_back(state.model());
  };
  using SteadyClock = std::chrono::steady_clock;
  auto elapsed_ns = [](SteadyClock::time_point start) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(SteadyClock::now() - start)
        .count();
  };

  const bool cohort = strategy.dispatch_mode() == DispatchMode::kCohort;
  refill();

  while (!queue.empty() && queue.top().fire_at <= setup.horizon) {
    const double t = queue.top().fire_at;
    while (next_sample < grid.size() && grid[next_sample] < t) sample(grid[next_sample++]);

    Event e = queue.pop();
    clock.advance_to(t);
    state.mark_idle(e.client_id);
    idle.push_back(e.client_id);
    ++result.arrival_count;

    e.update.arrival_time = t;
    const long tau = staleness(e.update, state.round());
    if (setup.record_trace) {
      result.arrivals.push_back({t, e.client_id, e.update.birth_round, tau});
    }

    auto start = SteadyClock::now();
    auto rec = strategy.on_arrival(std::move(e.update), state);
    record(rec, elapsed_ns(start));

    if (!cohort) {
      refill();
    } else if (state.in_flight_count() == 0) {
      start = SteadyClock::now();
      rec = strategy.on_cohort_complete(state);
      record(rec, elapsed_ns(start));
      refill();
    }
  }
  while (next_sample < grid.size()) sample(grid[next_sample++]);

  result.dispatch_count = seq;
  result.final_round = state.round();
  result.final_clock = clock.now();
  result.final_model = state.model();
  return result;
}

}  // namespace afbs
