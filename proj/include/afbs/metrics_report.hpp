#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace afbs {

struct TimelineEntry {
  double virtual_time = 0.0;
  double accuracy = 0.0;
  double loss = 0.0;
  long global_round = 0;

  bool operator==(const TimelineEntry&) const = default;
};

struct WorkRecord {
  long round = 0;  // global round after the aggregation
  double virtual_time = 0.0;
  std::size_t buffered = 0;
  std::size_t aggregated = 0;
  std::size_t summations = 0;
  std::size_t dropped = 0;
  std::size_t rescued = 0;

  bool operator==(const WorkRecord&) const = default;
};

/// Virtual-time grid on which model quality is sampled.
struct MetricsSchedule {
  double cadence = 600.0;
  bool include_t0 = true;
  std::vector<double> targets{0.5, 0.75, 0.9};
};

// Grid times in [0, horizon]; k * cadence, starting at k = 0 or 1.
std::vector<double> sample_times(const MetricsSchedule& schedule, double horizon);

struct RunReport {
  int schema_version = 1;
  std::string strategy;
  std::uint64_t seed = 0;
  std::uint64_t dataset_checksum = 0;
  nlohmann::json config_echo = nlohmann::json::object();
  std::vector<TimelineEntry> timeline;
  std::vector<double> targets;
  std::vector<WorkRecord> work;
  std::size_t arrivals = 0;
  long final_round = 0;
  int cluster_k = 0;
  std::vector<int> cluster_of;
  double cluster_ari = 0.0;  // against the generator's ground truth, when known
  // Wall-clock server handle time per aggregation. Kept out of report.json,
  // which must be byte-stable for a fixed seed.
  std::vector<std::int64_t> handle_time_ns;

  std::size_t aggregations() const { return work.size(); }
  std::size_t total_summations() const;
  double best_accuracy() const;
  double final_accuracy() const;
  std::int64_t median_handle_time_ns() const;

  // Equality of everything that is serialized (handle times excluded).
  bool operator==(const RunReport& other) const;
};

/// Earliest sampled time with accuracy >= target.
std::optional<double> time_to_target(const RunReport& report, double target);

nlohmann::json to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& j);
std::string timeline_csv(const RunReport& report);

enum class ReportFormat { kJson, kCsv };

// Throws std::runtime_error naming the path on I/O failure.
void emit(const RunReport& report, const std::string& path, ReportFormat format);
void write_handle_times(const RunReport& report, const std::string& path);

}  // namespace afbs
