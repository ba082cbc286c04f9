#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "afbs/clustering.hpp"
#include "afbs/server_state.hpp"
#include "afbs/update.hpp"

namespace afbs {

enum class DecayMode {
  kUniformMinStaleness,  // one lambda from the smallest staleness in the batch
  kPerGradient,          // lambda_i applied to each delta inside the sum
};

DecayMode parse_decay_mode(const std::string& name);
std::string to_string(DecayMode mode);

struct StrategyConfig {
  std::string name = "afbs";
  double eta_g = 1.0;
  int buffer_size = 10;  // C
  DecayMode decay_mode = DecayMode::kUniformMinStaleness;
  bool rescue = true;
  double async_mix_alpha = 0.6;
};

void validate(const StrategyConfig& cfg);

inline const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> names{"fedavg", "fedasync", "fedbuff", "fedfa", "afbs"};
  return names;
}

// V / (tau + 1)^2
double score(int volume, long tau);
double score(const Update& update, long current_round);

// 1 / sqrt(tau + 1)
double staleness_decay(long tau);

/// Outcome of Gradient-Select as indices into the buffer, in arrival order.
struct Selection {
  std::vector<std::size_t> kept;     // survivors, including rescued entries
  std::vector<std::size_t> dropped;  // removed by the keep rule and not rescued
  std::vector<std::size_t> rescued;  // removed by the keep rule, then rescued
  std::vector<std::size_t> cluster_max;  // argmax entry of every represented cluster
};

/// Per cluster, keeps x when V_x >= V_m or tau_x <= tau_m, where m is the
/// cluster's max-score entry (ties: lowest client id, then earliest arrival).
/// With `rescue`, every entry removed by that rule draws one uniform from
/// `rng`, in arrival order, and survives when the draw is below
/// score(x) / max score over the whole buffer.
Selection gradient_select(std::span<const Update> buffer, const ClusterAssignment& assignment,
                          long current_round, bool rescue, Rng& rng);

// Same, writing into `out` and reusing its capacity.
void gradient_select(std::span<const Update> buffer, const ClusterAssignment& assignment,
                     long current_round, bool rescue, Rng& rng, Selection& out);

/// Mean of the deltas with staleness decay, then w - eta_g * mean.
ModelParams aggregate_buffer(std::span<const Update> updates, const ModelParams& model,
                             long current_round, const StrategyConfig& cfg);

/// w - eta_g * sum(V_i delta_i) / sum(V_i).
ModelParams fedavg_round(std::span<const Update> updates, const ModelParams& model,
                         const StrategyConfig& cfg);

/// lambda * (w_dispatch - delta) + (1 - lambda) * w with
/// lambda = async_mix_alpha / sqrt(tau + 1).
ModelParams fedasync_mix(const Update& update, const ModelParams& model, long current_round,
                         const StrategyConfig& cfg);

/// Work done by one aggregation.
struct AggregationRecord {
  std::size_t buffered = 0;    // updates held when aggregation fired
  std::size_t aggregated = 0;  // updates that entered the sum
  std::size_t summations = 0;  // delta additions performed
  std::size_t dropped = 0;
  std::size_t rescued = 0;
};

enum class DispatchMode {
  kContinuous,  // keep a constant pool of clients in flight
  kCohort,      // synchronous rounds with a barrier
};

class AggregationStrategy {
 public:
  virtual ~AggregationStrategy() = default;
  virtual std::string name() const = 0;
  virtual DispatchMode dispatch_mode() const { return DispatchMode::kContinuous; }
  // Returns a record when the global model changed.
  virtual std::optional<AggregationRecord> on_arrival(Update update, ServerState& state) = 0;
  // Cohort mode: every client dispatched for the round has arrived.
  virtual std::optional<AggregationRecord> on_cohort_complete(ServerState&) {
    return std::nullopt;
  }
};

class FedAvgStrategy : public AggregationStrategy {
 public:
  explicit FedAvgStrategy(StrategyConfig cfg) : cfg_(std::move(cfg)) {}
  std::string name() const override { return "fedavg"; }
  DispatchMode dispatch_mode() const override { return DispatchMode::kCohort; }
  std::optional<AggregationRecord> on_arrival(Update update, ServerState& state) override;
  std::optional<AggregationRecord> on_cohort_complete(ServerState& state) override;

 private:
  StrategyConfig cfg_;
  std::vector<Update> cohort_;
};

class FedAsyncStrategy : public AggregationStrategy {
 public:
  explicit FedAsyncStrategy(StrategyConfig cfg) : cfg_(std::move(cfg)) {}
  std::string name() const override { return "fedasync"; }
  std::optional<AggregationRecord> on_arrival(Update update, ServerState& state) override;

 private:
  StrategyConfig cfg_;
};

class FedBuffStrategy : public AggregationStrategy {
 public:
  explicit FedBuffStrategy(StrategyConfig cfg) : cfg_(std::move(cfg)) {}
  std::string name() const override { return "fedbuff"; }
  std::optional<AggregationRecord> on_arrival(Update update, ServerState& state) override;
  std::size_t buffered() const { return buffer_.size(); }

 private:
  StrategyConfig cfg_;
  std::vector<Update> buffer_;
};

/// Sliding window of the last C updates; once the window has filled, every
/// arrival aggregates the whole window.
class FedFaStrategy : public AggregationStrategy {
 public:
  explicit FedFaStrategy(StrategyConfig cfg) : cfg_(std::move(cfg)) {}
  std::string name() const override { return "fedfa"; }
  std::optional<AggregationRecord> on_arrival(Update update, ServerState& state) override;
  const std::deque<Update>& window() const { return window_; }

 private:
  StrategyConfig cfg_;
  std::deque<Update> window_;
  bool filled_ = false;
};

class AfbsStrategy : public AggregationStrategy {
 public:
  AfbsStrategy(StrategyConfig cfg, std::shared_ptr<const ClusterAssignment> assignment);
  std::string name() const override { return "afbs"; }
  std::optional<AggregationRecord> on_arrival(Update update, ServerState& state) override;
  std::size_t buffered() const { return buffer_.size(); }

 private:
  StrategyConfig cfg_;
  std::shared_ptr<const ClusterAssignment> assignment_;
  std::vector<Update> buffer_;
  // Scratch reused across aggregations.
  Selection selection_;
  std::vector<const Update*> selected_;
};

std::unique_ptr<AggregationStrategy> make_strategy(
    const StrategyConfig& cfg, std::shared_ptr<const ClusterAssignment> assignment);

}  // namespace afbs
