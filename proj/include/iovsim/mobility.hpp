#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "iovsim/common.hpp"
#include "iovsim/scenario.hpp"

namespace iovsim {

struct Vehicle {
  VehicleId vehicle_id = 0;
  // trajectory[t - 1] is the position at tick t; empty means outside the area / inactive.
  std::vector<std::optional<Point>> trajectory;

  std::optional<Point> position(Tick t) const {
    if (t < 1 || static_cast<std::size_t>(t) > trajectory.size()) return std::nullopt;
    return trajectory[static_cast<std::size_t>(t - 1)];
  }
  bool active(Tick t) const { return position(t).has_value(); }
  std::size_t fix_count() const;
  friend bool operator==(const Vehicle&, const Vehicle&) = default;
};

struct ServiceRequest {
  VehicleId vehicle_id = 0;
  ServiceId service_id = 1;
  Point location;
  Tick time = 1;
  friend bool operator==(const ServiceRequest&, const ServiceRequest&) = default;
};

struct TraceParseResult {
  std::vector<Vehicle> vehicles;
  std::size_t malformed_lines = 0;
  std::size_t fixes_outside = 0;
};

/// Equirectangular projection about `origin`: x east, y north, meters. East-west distances are
/// true along `standard_parallel`; the two-argument form uses the origin's latitude. Trace
/// parsing uses the middle of the bounding box, which halves the worst-case distortion.
Point project(LatLon p, LatLon origin, double standard_parallel);
inline Point project(LatLon p, LatLon origin) { return project(p, origin, origin.lat); }

struct TraceOptions {
  GeoBox bbox;
  LatLon origin;
  int horizon = 900;
  Area area;
  std::optional<std::int64_t> window_start;
  std::optional<std::int64_t> window_end;
};

TraceOptions trace_options(const ScenarioConfig& cfg);

/// Reads one cabspotting file per taxi (`latitude longitude occupancy unix-time`, newest first).
/// Files are taken in sorted name order (ids 1..N); names starting with '_' or '.' are skipped.
/// The wall-clock span covered by all in-box fixes is split uniformly into `horizon` bins and each
/// vehicle keeps its latest fix per bin.
TraceParseResult parse_cabspotting(const std::filesystem::path& dir, const TraceOptions& opts);

/// Random-waypoint vehicles (see MobilityConfig for the attraction-point variant). Per-tick
/// displacement never exceeds max_speed * tick_seconds.
std::vector<Vehicle> synthesize_vehicles(int count, int horizon, Area area, const MobilityConfig& mobility,
                                         std::uint64_t seed);

/// Exactly one request per vehicle active at `t`, services uniform over 1..num_services.
std::vector<ServiceRequest> generate_requests(const std::vector<Vehicle>& vehicles, int num_services, Tick t,
                                              Rng& rng);

/// Same, on the (seed, t) request stream.
std::vector<ServiceRequest> generate_requests(const std::vector<Vehicle>& vehicles, int num_services, Tick t,
                                              std::uint64_t seed);

// Normalized trace CSV: header `vehicle_id,t,x_m,y_m`, one row per active (vehicle, tick).
void write_trace_csv(const std::vector<Vehicle>& vehicles, const std::filesystem::path& path);
std::vector<Vehicle> read_trace_csv(const std::filesystem::path& path, int horizon);

}  // namespace iovsim
