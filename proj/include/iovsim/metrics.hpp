#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iovsim/adversary.hpp"
#include "iovsim/agent.hpp"
#include "iovsim/scenario.hpp"

namespace iovsim {

int reopt_count(std::span<const TickLog> logs);

/// Mean true delay per service over the whole run. Services nobody requested have no key.
std::map<ServiceId, double> avg_service_delay(std::span<const TickLog> logs);

/// avg_service_delay restricted to the roster's vehicles.
std::map<ServiceId, double> targeted_delay(std::span<const TickLog> logs, const SybilRoster& roster);

/// Pooled mean true delay of the roster's vehicles over the given services (every entry weighs
/// the same). nullopt when there is no such entry.
std::optional<double> targeted_delay_pooled(std::span<const TickLog> logs, const SybilRoster& roster,
                                            std::span<const ServiceId> services);

/// Time mean of per-edge utilization of the placement in force, indexed edge_id - 1.
std::vector<double> resource_usage(std::span<const TickLog> logs, const ScenarioConfig& cfg);

/// (sum x)^2 / (n * sum x^2). Throws DomainError for an empty, negative or all-zero input.
double jains_index(std::span<const double> x);

/// Jain's index of the run: over the time-mean utilization vector, or the mean of per-tick
/// indices (ticks whose placement uses no capacity are skipped).
double fairness(std::span<const TickLog> logs, const ScenarioConfig& cfg, FairnessMode mode);

/// Services whose feedback the attack rewrites: all of them for Any, the selective set otherwise.
std::vector<ServiceId> attacked_services(const ScenarioConfig& cfg, AttackMode mode);

struct MetricRow {
  std::string metric;
  std::string scope;
  std::string key;
  double value = 0.0;
  std::uint64_t run_seed = 0;
  friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

/// Every metric of one finished run, flattened to rows.
std::vector<MetricRow> run_metric_rows(std::span<const TickLog> logs, const ScenarioConfig& cfg,
                                       const SybilRoster& roster, const std::string& scope, std::uint64_t run_seed);

/// Shortest text that parses back to the same double.
std::string format_value(double v);

/// CSV with header `metric,scope,key,value,run_seed`.
std::string metrics_csv(std::span<const MetricRow> rows);
/// The same rows as a JSON array of objects.
std::string metrics_json(std::span<const MetricRow> rows);

}  // namespace iovsim
