#include "afbs/metrics_report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

namespace afbs {

std::vector<double> sample_times(const MetricsSchedule& schedule, double horizon) {
  std::vector<double> out;
  if (!(schedule.cadence > 0.0)) return out;
  for (long k = schedule.include_t0 ? 0 : 1;; ++k) {
    const double t = static_cast<double>(k) * schedule.cadence;
    if (t > horizon) break;
    out.push_back(t);
  }
  return out;
}

std::size_t RunReport::total_summations() const {
  std::size_t s = 0;
  for (const auto& w : work) s += w.summations;
  return s;
}

double RunReport::best_accuracy() const {
  double best = 0.0;
  for (const auto& e : timeline) best = std::max(best, e.accuracy);
  return best;
}

double RunReport::final_accuracy() const {
  return timeline.empty() ? 0.0 : timeline.back().accuracy;
}

std::int64_t RunReport::median_handle_time_ns() const {
  if (handle_time_ns.empty()) return 0;
  auto v = handle_time_ns;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const auto lo = *std::max_element(v.begin(), mid);
  return (lo + *mid) / 2;
}

bool RunReport::operator==(const RunReport& o) const {
  return schema_version == o.schema_version && strategy == o.strategy && seed == o.seed &&
         dataset_checksum == o.dataset_checksum && config_echo == o.config_echo &&
         timeline == o.timeline && targets == o.targets && work == o.work &&
         arrivals == o.arrivals && final_round == o.final_round && cluster_k == o.cluster_k &&
         cluster_of == o.cluster_of && cluster_ari == o.cluster_ari;
}

std::optional<double> time_to_target(const RunReport& report, double target) {
  for (const auto& e : report.timeline) {
    if (e.accuracy >= target) return e.virtual_time;
  }
  return std::nullopt;
}

nlohmann::json to_json(const RunReport& r) {
  using nlohmann::json;
  json timeline = json::array();
  for (const auto& e : r.timeline) {
    timeline.push_back({{"virtual_time", e.virtual_time},
                        {"accuracy", e.accuracy},
                        {"loss", e.loss},
                        {"global_round", e.global_round}});
  }
  json ttt = json::array();
  for (double t : r.targets) {
    auto hit = time_to_target(r, t);
    ttt.push_back({{"target", t}, {"virtual_time", hit ? json(*hit) : json(nullptr)}});
  }
  json work = json::array();
  for (const auto& w : r.work) {
    work.push_back({{"round", w.round},
                    {"virtual_time", w.virtual_time},
                    {"buffered", w.buffered},
                    {"aggregated", w.aggregated},
                    {"summations", w.summations},
                    {"dropped", w.dropped},
                    {"rescued", w.rescued}});
  }
  json j;
  j["schema_version"] = r.schema_version;
  j["strategy"] = r.strategy;
  j["seed"] = r.seed;
  j["dataset_checksum"] = fmt::format("{:016x}", r.dataset_checksum);
  j["config"] = r.config_echo;
  j["timeline"] = std::move(timeline);
  j["time_to_target"] = std::move(ttt);
  j["work"] = std::move(work);
  j["summary"] = {{"arrivals", r.arrivals},
                  {"aggregations", r.aggregations()},
                  {"final_round", r.final_round},
                  {"total_summations", r.total_summations()},
                  {"best_accuracy", r.best_accuracy()},
                  {"final_accuracy", r.final_accuracy()}};
  j["clustering"] = {{"k", r.cluster_k}, {"ari_vs_ground_truth", r.cluster_ari},
                     {"cluster_of", r.cluster_of}};
  return j;
}

RunReport report_from_json(const nlohmann::json& j) {
  RunReport r;
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version != 1) {
    throw std::runtime_error(fmt::format("unsupported report schema_version {}", r.schema_version));
  }
  r.strategy = j.at("strategy").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.dataset_checksum = std::stoull(j.at("dataset_checksum").get<std::string>(), nullptr, 16);
  r.config_echo = j.at("config");
  for (const auto& e : j.at("timeline")) {
    r.timeline.push_back({e.at("virtual_time").get<double>(), e.at("accuracy").get<double>(),
                          e.at("loss").get<double>(), e.at("global_round").get<long>()});
  }
  for (const auto& t : j.at("time_to_target")) r.targets.push_back(t.at("target").get<double>());
  for (const auto& w : j.at("work")) {
    WorkRecord rec;
    rec.round = w.at("round").get<long>();
    rec.virtual_time = w.at("virtual_time").get<double>();
    rec.buffered = w.at("buffered").get<std::size_t>();
    rec.aggregated = w.at("aggregated").get<std::size_t>();
    rec.summations = w.at("summations").get<std::size_t>();
    rec.dropped = w.at("dropped").get<std::size_t>();
    rec.rescued = w.at("rescued").get<std::size_t>();
    r.work.push_back(rec);
  }
  const auto& s = j.at("summary");
  r.arrivals = s.at("arrivals").get<std::size_t>();
  r.final_round = s.at("final_round").get<long>();
  const auto& c = j.at("clustering");
  r.cluster_k = c.at("k").get<int>();
  r.cluster_ari = c.at("ari_vs_ground_truth").get<double>();
  r.cluster_of = c.at("cluster_of").get<std::vector<int>>();
  return r;
}

std::string timeline_csv(const RunReport& r) {
  std::string out = "virtual_time,accuracy,loss,global_round\n";
  for (const auto& e : r.timeline) {
    out += fmt::format("{},{},{},{}\n", e.virtual_time, e.accuracy, e.loss, e.global_round);
  }
  return out;
}

namespace {

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path));
  out << contents;
  out.flush();
  if (!out) throw std::runtime_error(fmt::format("write to '{}' failed", path));
}

}  // namespace

void emit(const RunReport& report, const std::string& path, ReportFormat format) {
  if (format == ReportFormat::kJson) {
    write_file(path, to_json(report).dump(2) + "\n");
  } else {
    write_file(path, timeline_csv(report));
  }
}

void write_handle_times(const RunReport& report, const std::string& path) {
  nlohmann::json j = {{"strategy", report.strategy},
                      {"median_handle_time_ns", report.median_handle_time_ns()},
                      {"handle_time_ns", report.handle_time_ns}};
  write_file(path, j.dump(2) + "\n");
}

}  // namespace afbs
