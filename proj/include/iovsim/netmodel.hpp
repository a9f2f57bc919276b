#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "iovsim/common.hpp"
#include "iovsim/mobility.hpp"
#include "iovsim/scenario.hpp"

namespace iovsim {

/// Which edges host an instance of each service. Stored as one edge bitmask per service
/// (bit e-1 set <=> edge e hosts the service), so at most 64 edges.
class PlacementAction {
 public:
  PlacementAction() = default;
  explicit PlacementAction(int num_services) : masks_(static_cast<std::size_t>(num_services), 0) {}
  static PlacementAction from_masks(std::vector<std::uint64_t> masks);
  static PlacementAction from_hosts(const std::vector<std::vector<EdgeId>>& hosts);

  int num_services() const { return static_cast<int>(masks_.size()); }
  std::uint64_t mask(ServiceId s) const { return masks_[index(s)]; }
  void set_mask(ServiceId s, std::uint64_t m) { masks_[index(s)] = m; }
  const std::vector<std::uint64_t>& masks() const { return masks_; }

  bool hosts(ServiceId s, EdgeId e) const { return (mask(s) >> (e - 1)) & 1u; }
  void add(ServiceId s, EdgeId e) { masks_[index(s)] |= bit(e); }
  void remove(ServiceId s, EdgeId e) { masks_[index(s)] &= ~bit(e); }

  /// Hosting edge ids of `s`, ascending.
  std::vector<EdgeId> host_list(ServiceId s) const;
  int instance_count() const;
  bool every_service_hosted() const;

  /// Service-major binary matrix [S x E].
  std::vector<double> encode(int num_edges) const;
  /// "1:{1,4} 2:{} ..."
  std::string to_string() const;

  static std::uint64_t bit(EdgeId e) { return std::uint64_t{1} << (e - 1); }
  friend bool operator==(const PlacementAction&, const PlacementAction&) = default;

 private:
  static std::size_t index(ServiceId s) { return static_cast<std::size_t>(s - 1); }
  std::vector<std::uint64_t> masks_;
};

struct DelayObservation {
  VehicleId vehicle_id = 0;
  ServiceId service_id = 1;
  EdgeId edge_id = kCloud;
  double true_delay = 0.0;  // ms
  Tick time = 1;
  friend bool operator==(const DelayObservation&, const DelayObservation&) = default;
};

/// Nearest hosting edge (lowest id on ties), or kCloud when the service has no instance.
EdgeId associate(const ServiceRequest& request, const PlacementAction& placement, std::span<const EdgeNode> edges);

/// Edge: proc_delay + per_meter_delay * distance; cloud: cloud_fallback_delay.
double compute_delay(const ServiceRequest& request, EdgeId serving, std::span<const EdgeNode> edges,
                     const DelayModelParams& params);

/// util[e-1] = sum of R_s over services hosted on e, divided by C_e. Values above 1 are infeasible.
std::vector<double> utilization(const PlacementAction& placement, std::span<const ServiceSpec> services,
                                std::span<const EdgeNode> edges);

bool capacity_feasible(const PlacementAction& placement, std::span<const ServiceSpec> services,
                       std::span<const EdgeNode> edges);

/// Request-to-edge distances in edge-major layout: at(e, k) = |request k - edge e|.
class DistanceMatrix {
 public:
  DistanceMatrix(std::span<const ServiceRequest> requests, std::span<const EdgeNode> edges);

  std::size_t requests() const { return n_; }
  std::size_t edges() const { return e_; }
  double at(EdgeId e, std::size_t k) const { return data_[static_cast<std::size_t>(e - 1) * n_ + k]; }
  std::span<const double> column(EdgeId e) const {
    return {data_.data() + static_cast<std::size_t>(e - 1) * n_, n_};
  }

 private:
  std::size_t n_ = 0;
  std::size_t e_ = 0;
  std::vector<double> data_;
};

/// Associates and evaluates every request under `placement` (vectorized distance pass). Each
/// element equals compute_delay(r, associate(r, placement, edges), edges, params) bit for bit.
std::vector<DelayObservation> observe_delays(std::span<const ServiceRequest> requests,
                                             const PlacementAction& placement, const ScenarioConfig& cfg);

}  // namespace iovsim
