#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "iovsim/common.hpp"

namespace iovsim {

struct ServiceSpec {
  ServiceId service_id = 1;
  double resource_req = 1.0;    // R_s, resource units
  double delay_threshold = 1.0; // D_s, ms
  friend bool operator==(const ServiceSpec&, const ServiceSpec&) = default;
};

struct EdgeNode {
  EdgeId edge_id = 1;
  Point position;
  double capacity = 1.0;  // C_e, resource units
  friend bool operator==(const EdgeNode&, const EdgeNode&) = default;
};

struct DelayModelParams {
  double proc_delay = 1.0;            // ms
  double per_meter_delay = 0.002;     // ms per meter
  double cloud_fallback_delay = 50.0; // ms
  friend bool operator==(const DelayModelParams&, const DelayModelParams&) = default;
};

enum class DelayNormalization { Threshold, Raw };

struct TrainingConfig {
  int batch_size = 32;
  int replay_capacity = 32;
  int train_period_mean = 2;  // T; actual period ~ U{1, 2T-1}
  int steps_per_train = 4;
  std::vector<int> hidden_layers{64, 64};
  double learning_rate = 0.2;
  double quality_scale = 20.0;   // ms
  double reopt_threshold = 0.5;
  double bootstrap_gamma = 0.0;  // 0 = immediate-quality targets
  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

enum class AttackMode { Any, Selective };

struct AttackConfig {
  bool enabled = false;
  double proportion = 0.0;
  AttackMode mode = AttackMode::Any;
  std::vector<ServiceId> selective_services{1, 2, 3, 4};
  std::vector<double> fake_delays{3, 4, 5, 6, 7, 8, 9};
  friend bool operator==(const AttackConfig&, const AttackConfig&) = default;
};

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
  friend bool operator==(const LatLon&, const LatLon&) = default;
};

struct GeoBox {
  LatLon south_west;
  LatLon north_east;
  friend bool operator==(const GeoBox&, const GeoBox&) = default;

  bool contains(LatLon p) const {
    return p.lat >= south_west.lat && p.lat <= north_east.lat && p.lon >= south_west.lon &&
           p.lon <= north_east.lon;
  }
};

/// Synthetic and trace mobility settings.
struct MobilityConfig {
  int vehicles = 500;
  double max_speed = 15.0;     // m/s
  double min_speed = 5.0;      // m/s
  double tick_seconds = 60.0;
  // Waypoints are drawn near one of `hotspots` attraction points with probability `hotspot_bias`,
  // otherwise uniformly over the area. The attraction points move to new random locations every
  // `hotspot_period` ticks (0 = never). With a positive `hotspot_speed` they instead travel
  // continuously along their own random-waypoint paths and the period is ignored.
  int hotspots = 1;
  double hotspot_bias = 1.0;
  double hotspot_spread = 300.0;  // m, std dev around an attraction point
  int hotspot_period = 35;
  double hotspot_speed = 0.0;  // m/s
  // Cabspotting ingestion.
  GeoBox trace_bbox{{37.7000, -122.4800}, {37.7899, -122.3664}};
  LatLon projection_origin{37.7000, -122.4800};
  std::optional<std::int64_t> trace_window_start;  // unix seconds
  std::optional<std::int64_t> trace_window_end;
  friend bool operator==(const MobilityConfig&, const MobilityConfig&) = default;
};

enum class FairnessMode { TimeMeanUtilization, MeanPerTick };

struct ScenarioConfig {
  std::vector<ServiceSpec> services;
  std::vector<EdgeNode> edges;
  int horizon = 900;
  Area area;
  double alpha = 0.5;
  DelayNormalization delay_normalization = DelayNormalization::Threshold;
  DelayModelParams delay_model;
  TrainingConfig training;
  AttackConfig attack;
  MobilityConfig mobility;
  FairnessMode fairness = FairnessMode::TimeMeanUtilization;
  std::uint64_t seed = 1;
  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;

  int num_services() const { return static_cast<int>(services.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  const ServiceSpec& service(ServiceId s) const { return services[static_cast<std::size_t>(s - 1)]; }
  const EdgeNode& edge(EdgeId e) const { return edges[static_cast<std::size_t>(e - 1)]; }
};

/// Edges at the cell centers of a rows x cols grid over the area, numbered row-major from the
/// south-west cell.
std::vector<EdgeNode> grid_edges(Area area, int rows, int cols, const std::vector<double>& capacities);

/// Eight services, six edges on a 2x3 grid over 10x10 km, 900 ticks, f_d = {3..9} ms.
ScenarioConfig default_scenario();

ScenarioConfig load_config(const std::filesystem::path& path);
ScenarioConfig parse_config(const std::string& text, const std::string& origin = "<string>");
std::string serialize_config(const ScenarioConfig& cfg);

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;

  bool ok() const { return violations.empty(); }
};

ValidationReport validate_scenario(const ScenarioConfig& cfg);

std::string to_string(AttackMode m);
AttackMode attack_mode_from_string(const std::string& s);

}  // namespace iovsim
