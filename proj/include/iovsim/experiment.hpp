#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iovsim/adversary.hpp"
#include "iovsim/agent.hpp"
#include "iovsim/metrics.hpp"
#include "iovsim/scenario.hpp"

namespace iovsim {

/// A sweep cell. The no-attack cell (proportion 0) has no mode and is shared by both modes.
struct CellKey {
  int proportion = 0;  // percent of vehicles compromised
  std::optional<AttackMode> mode;

  std::string label() const;  // "na", "any-10", "selective-50"
  friend bool operator==(const CellKey&, const CellKey&) = default;
  friend bool operator<(const CellKey& a, const CellKey& b);
};

struct SweepSpec {
  std::vector<int> proportions{0, 10, 20, 30, 40, 50};
  std::vector<AttackMode> modes{AttackMode::Any, AttackMode::Selective};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  /// Distinct cells in output order.
  std::vector<CellKey> cells() const;
};

struct RunRecord {
  CellKey cell;
  std::uint64_t seed = 0;
  std::optional<std::string> error;

  int reopt_count = 0;
  std::map<ServiceId, double> delay_all;
  std::map<ServiceId, double> delay_targeted;
  /// Same-seed no-attack run seen through this run's roster (paired baseline).
  std::map<ServiceId, double> na_delay_targeted;
  /// Pooled over the services the mode attacks.
  std::optional<double> targeted_attacked;
  std::optional<double> na_targeted_attacked;
  std::vector<double> resource;
  double fairness = 0.0;
  std::size_t roster_size = 0;
  std::vector<MetricRow> rows;

  bool ok() const { return !error.has_value(); }
};

struct Stat {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;
};

struct CellSummary {
  CellKey cell;
  std::size_t runs_ok = 0;
  std::vector<std::string> errors;
  Stat reopt;
  Stat fairness;
  std::map<ServiceId, Stat> delay_all;
  std::map<ServiceId, Stat> delay_targeted;
  std::map<ServiceId, Stat> na_delay_targeted;
  std::optional<Stat> targeted_attacked;
  std::optional<Stat> na_targeted_attacked;
  std::vector<Stat> resource;
};

struct ResultsBundle {
  ScenarioConfig config;
  SweepSpec sweep;
  std::vector<RunRecord> runs;  // ordered by (proportion, mode, seed)
  std::vector<CellSummary> cells;

  bool all_ok() const;
  const CellSummary* find(const CellKey& key) const;
};

/// Called after every completed simulation (including no-attack baselines that are not part
/// of the sweep) with the run's configuration, logs and roster.
using RunObserver =
    std::function<void(const ScenarioConfig&, std::span<const TickLog>, const SybilRoster&)>;

struct ExperimentOptions {
  SweepSpec sweep;
  std::optional<std::filesystem::path> trace_dir;  // synthetic mobility when empty
  std::optional<std::filesystem::path> ticklog_dir;  // NDJSON tick logs and roster CSVs
  RunObserver observer;
};

/// Configuration of one run: cfg with the seed and attack settings of the cell.
ScenarioConfig run_config(const ScenarioConfig& cfg, const CellKey& cell, std::uint64_t seed);

/// Vehicles for a seed: the parsed trace when a directory is given, else synthetic mobility.
std::vector<Vehicle> load_vehicles(const ScenarioConfig& cfg, const std::optional<std::filesystem::path>& trace_dir,
                                   std::uint64_t seed);

/// Runs every (cell, seed) of the sweep. A failing run is recorded with its error and the
/// remaining runs continue. Results are independent of execution order.
ResultsBundle run_experiment(const ScenarioConfig& cfg, const ExperimentOptions& options);

/// Averages per-seed records of each cell.
std::vector<CellSummary> summarize(const SweepSpec& sweep, std::span<const RunRecord> runs);

struct ManifestEntry {
  std::string file;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

std::string sha256_file(const std::filesystem::path& path);

/// Writes reopt.csv, delay_all.csv, delay_targeted.csv, resource.csv, fairness.csv, metrics.csv,
/// summary.json and manifest.json (summary and manifest only for an empty bundle).
std::vector<ManifestEntry> export_results(const ResultsBundle& results, const std::filesystem::path& out_dir);

}  // namespace iovsim
