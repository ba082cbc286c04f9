#include "afbs/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace afbs {
namespace {

ModelParams buffered_step(const std::vector<const Update*>& updates, const ModelParams& model,
                          long current_round, const StrategyConfig& cfg) {
  if (updates.empty()) throw InvariantViolation("aggregation over an empty update set");
  const std::size_t dim = model.size();
  std::vector<double> acc(dim, 0.0);
  double scale = 1.0 / static_cast<double>(updates.size());

  if (cfg.decay_mode == DecayMode::kUniformMinStaleness) {
    long tau_min = std::numeric_limits<long>::max();
    for (const Update* u : updates) tau_min = std::min(tau_min, staleness(*u, current_round));
    for (const Update* u : updates) {
      if (u->delta.size() != dim) throw InvariantViolation("delta dimension mismatch");
      for (std::size_t j = 0; j < dim; ++j) acc[j] += u->delta[j];
    }
    scale *= staleness_decay(tau_min);
  } else {
    for (const Update* u : updates) {
      if (u->delta.size() != dim) throw InvariantViolation("delta dimension mismatch");
      const double lambda = staleness_decay(staleness(*u, current_round));
      for (std::size_t j = 0; j < dim; ++j) acc[j] += lambda * u->delta[j];
    }
  }

  ModelParams next(dim);
  for (std::size_t j = 0; j < dim; ++j) next[j] = model[j] - cfg.eta_g * (scale * acc[j]);
  return next;
}

std::vector<const Update*> pointers(std::span<const Update> updates) {
  std::vector<const Update*> out;
  out.reserve(updates.size());
  for (const auto& u : updates) out.push_back(&u);
  return out;
}

}  // namespace

DecayMode parse_decay_mode(const std::string& name) {
  if (name == "uniform_min_staleness") return DecayMode::kUniformMinStaleness;
  if (name == "per_gradient") return DecayMode::kPerGradient;
  throw ConfigError(fmt::format(
      "unknown decay_mode '{}' (expected uniform_min_staleness or per_gradient)", name));
}

std::string to_string(DecayMode mode) {
  return mode == DecayMode::kUniformMinStaleness ? "uniform_min_staleness" : "per_gradient";
}

void validate(const StrategyConfig& cfg) {
  const auto& names = strategy_names();
  if (std::find(names.begin(), names.end(), cfg.name) == names.end()) {
    throw ConfigError(fmt::format("unknown strategy '{}'", cfg.name));
  }
  if (!(cfg.eta_g > 0.0)) throw ConfigError("strategy.eta_g must be > 0");
  if (cfg.buffer_size < 1) throw ConfigError("strategy.C must be >= 1");
  if (!(cfg.async_mix_alpha >= 0.0 && cfg.async_mix_alpha <= 1.0)) {
    throw ConfigError("strategy.async_mix_alpha must be in [0, 1]");
  }
}

double score(int volume, long tau) {
  const double t = static_cast<double>(tau) + 1.0;
  return static_cast<double>(volume) / (t * t);
}

double score(const Update& update, long current_round) {
  return score(update.volume, staleness(update, current_round));
}

double staleness_decay(long tau) { return 1.0 / std::sqrt(static_cast<double>(tau) + 1.0); }

void gradient_select(std::span<const Update> buffer, const ClusterAssignment& assignment,
                     long current_round, bool rescue, Rng& rng, Selection& out) {
  if (buffer.empty()) throw InvariantViolation("gradient_select called on an empty buffer");
  out.kept.clear();
  out.dropped.clear();
  out.rescued.clear();
  out.cluster_max.clear();
  const int k = assignment.k();
  const std::size_t n = buffer.size();

  // Per-call scratch, kept across calls to avoid allocating on every aggregation.
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  thread_local std::vector<long> tau;
  thread_local std::vector<double> scores;
  thread_local std::vector<std::size_t> best;
  tau.resize(n);
  scores.resize(n);
  best.assign(static_cast<std::size_t>(k), kNone);

  double global_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int c = buffer[i].cluster_id;
    if (c < 0 || c >= k) {
      throw StrategyError(fmt::format("update from client {} has cluster id {} outside [0, {})",
                                      buffer[i].client_id, c, k));
    }
    tau[i] = staleness(buffer[i], current_round);
    scores[i] = score(buffer[i].volume, tau[i]);
    global_max = std::max(global_max, scores[i]);
    auto& b = best[static_cast<std::size_t>(c)];
    if (b == kNone || scores[i] > scores[b] ||
        (scores[i] == scores[b] && buffer[i].client_id < buffer[b].client_id)) {
      b = i;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t m = best[static_cast<std::size_t>(buffer[i].cluster_id)];
    if (m == i) out.cluster_max.push_back(i);
    const bool keep = buffer[i].volume >= buffer[m].volume || tau[i] <= tau[m];
    if (keep) {
      out.kept.push_back(i);
    } else if (rescue && rng.uniform() < scores[i] / global_max) {
      out.kept.push_back(i);
      out.rescued.push_back(i);
    } else {
      out.dropped.push_back(i);
    }
  }
}

Selection gradient_select(std::span<const Update> buffer, const ClusterAssignment& assignment,
                          long current_round, bool rescue, Rng& rng) {
  Selection sel;
  gradient_select(buffer, assignment, current_round, rescue, rng, sel);
  return sel;
}

ModelParams aggregate_buffer(std::span<const Update> updates, const ModelParams& model,
                             long current_round, const StrategyConfig& cfg) {
  return buffered_step(pointers(updates), model, current_round, cfg);
}

ModelParams fedavg_round(std::span<const Update> updates, const ModelParams& model,
                         const StrategyConfig& cfg) {
  if (updates.empty()) throw InvariantViolation("fedavg_round with no updates");
  const std::size_t dim = model.size();
  std::vector<double> acc(dim, 0.0);
  double total = 0.0;
  for (const auto& u : updates) {
    if (u.delta.size() != dim) throw InvariantViolation("delta dimension mismatch");
    const double w = static_cast<double>(u.volume);
    total += w;
    for (std::size_t j = 0; j < dim; ++j) acc[j] += w * u.delta[j];
  }
  ModelParams next(dim);
  for (std::size_t j = 0; j < dim; ++j) next[j] = model[j] - cfg.eta_g * (acc[j] / total);
  return next;
}

ModelParams fedasync_mix(const Update& update, const ModelParams& model, long current_round,
                         const StrategyConfig& cfg) {
  if (!update.base_model) {
    throw StrategyError(
        fmt::format("fedasync: update from client {} carries no base model", update.client_id));
  }
  const ModelParams& base = *update.base_model;
  if (base.size() != model.size() || update.delta.size() != model.size()) {
    throw InvariantViolation("fedasync: dimension mismatch");
  }
  const double lambda =
      cfg.async_mix_alpha * staleness_decay(staleness(update, current_round));
  ModelParams next(model.size());
  for (std::size_t j = 0; j < model.size(); ++j) {
    const double client = base[j] - update.delta[j];
    next[j] = lambda * client + (1.0 - lambda) * model[j];
  }
  return next;
}

std::optional<AggregationRecord> FedAvgStrategy::on_arrival(Update update, ServerState&) {
  cohort_.push_back(std::move(update));
  return std::nullopt;
}

std::optional<AggregationRecord> FedAvgStrategy::on_cohort_complete(ServerState& state) {
  if (cohort_.empty()) return std::nullopt;
  state.commit(fedavg_round(cohort_, state.model(), cfg_));
  AggregationRecord rec;
  rec.buffered = rec.aggregated = rec.summations = cohort_.size();
  cohort_.clear();
  return rec;
}

std::optional<AggregationRecord> FedAsyncStrategy::on_arrival(Update update, ServerState& state) {
  state.commit(fedasync_mix(update, state.model(), state.round(), cfg_));
  AggregationRecord rec;
  rec.buffered = rec.aggregated = rec.summations = 1;
  return rec;
}

std::optional<AggregationRecord> FedBuffStrategy::on_arrival(Update update, ServerState& state) {
  buffer_.push_back(std::move(update));
  if (buffer_.size() < static_cast<std::size_t>(cfg_.buffer_size)) return std::nullopt;
  state.commit(aggregate_buffer(buffer_, state.model(), state.round(), cfg_));
  AggregationRecord rec;
  rec.buffered = rec.aggregated = rec.summations = buffer_.size();
  buffer_.clear();
  return rec;
}

std::optional<AggregationRecord> FedFaStrategy::on_arrival(Update update, ServerState& state) {
  window_.push_back(std::move(update));
  if (window_.size() > static_cast<std::size_t>(cfg_.buffer_size)) window_.pop_front();
  if (window_.size() == static_cast<std::size_t>(cfg_.buffer_size)) filled_ = true;
  if (!filled_) return std::nullopt;
  std::vector<const Update*> ptrs;
  ptrs.reserve(window_.size());
  for (const auto& u : window_) ptrs.push_back(&u);
  state.commit(buffered_step(ptrs, state.model(), state.round(), cfg_));
  AggregationRecord rec;
  rec.buffered = rec.aggregated = rec.summations = window_.size();
  return rec;
}

AfbsStrategy::AfbsStrategy(StrategyConfig cfg,
                           std::shared_ptr<const ClusterAssignment> assignment)
    : cfg_(std::move(cfg)), assignment_(std::move(assignment)) {
  if (!assignment_ || assignment_->k() < 1) {
    throw StrategyError("afbs requires a non-empty client cluster assignment");
  }
}

std::optional<AggregationRecord> AfbsStrategy::on_arrival(Update update, ServerState& state) {
  buffer_.push_back(std::move(update));
  if (buffer_.size() < static_cast<std::size_t>(cfg_.buffer_size)) return std::nullopt;

  gradient_select(buffer_, *assignment_, state.round(), cfg_.rescue, state.selection_rng(),
                  selection_);
  selected_.clear();
  for (std::size_t i : selection_.kept) selected_.push_back(&buffer_[i]);
  state.commit(buffered_step(selected_, state.model(), state.round(), cfg_));

  AggregationRecord rec;
  rec.buffered = buffer_.size();
  rec.aggregated = rec.summations = selected_.size();
  rec.dropped = selection_.dropped.size();
  rec.rescued = selection_.rescued.size();
  buffer_.clear();
  return rec;
}

std::unique_ptr<AggregationStrategy> make_strategy(
    const StrategyConfig& cfg, std::shared_ptr<const ClusterAssignment> assignment) {
  validate(cfg);
  if (cfg.name == "fedavg") return std::make_unique<FedAvgStrategy>(cfg);
  if (cfg.name == "fedasync") return std::make_unique<FedAsyncStrategy>(cfg);
  if (cfg.name == "fedbuff") return std::make_unique<FedBuffStrategy>(cfg);
  if (cfg.name == "fedfa") return std::make_unique<FedFaStrategy>(cfg);
  return std::make_unique<AfbsStrategy>(cfg, std::move(assignment));
}

}  // namespace afbs
