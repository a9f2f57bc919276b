#include "iovsim/netmodel.hpp"

#include <bit>
#include <limits>
#include <sstream>

#include "iovsim/kernels/kernels.hpp"

namespace iovsim {

PlacementAction PlacementAction::from_masks(std::vector<std::uint64_t> masks) {
  PlacementAction p;
  p.masks_ = std::move(masks);
  return p;
}

PlacementAction PlacementAction::from_hosts(const std::vector<std::vector<EdgeId>>& hosts) {
  PlacementAction p(static_cast<int>(hosts.size()));
  for (std::size_t s = 0; s < hosts.size(); ++s) {
    for (EdgeId e : hosts[s]) {
      if (e < 1 || e > 64) throw std::invalid_argument("edge id out of range: " + std::to_string(e));
      p.add(static_cast<ServiceId>(s + 1), e);
    }
  }
  return p;
}

std::vector<EdgeId> PlacementAction::host_list(ServiceId s) const {
  std::vector<EdgeId> out;
  for (std::uint64_t m = mask(s); m; m &= m - 1) out.push_back(std::countr_zero(m) + 1);
  return out;
}

int PlacementAction::instance_count() const {
  int n = 0;
  for (auto m : masks_) n += std::popcount(m);
  return n;
}

bool PlacementAction::every_service_hosted() const {
  for (auto m : masks_) {
    if (m == 0) return false;
  }
  return true;
}

std::vector<double> PlacementAction::encode(int num_edges) const {
  std::vector<double> out(masks_.size() * static_cast<std::size_t>(num_edges), 0.0);
  for (std::size_t s = 0; s < masks_.size(); ++s) {
    for (int e = 0; e < num_edges; ++e) {
      if ((masks_[s] >> e) & 1u) out[s * static_cast<std::size_t>(num_edges) + static_cast<std::size_t>(e)] = 1.0;
    }
  }
  return out;
}

std::string PlacementAction::to_string() const {
  std::ostringstream os;
  for (std::size_t s = 0; s < masks_.size(); ++s) {
    if (s) os << ' ';
    os << (s + 1) << ":{";
    bool first = true;
    for (EdgeId e : host_list(static_cast<ServiceId>(s + 1))) {
      os << (first ? "" : ",") << e;
      first = false;
    }
    os << '}';
  }
  return os.str();
}

EdgeId associate(const ServiceRequest& request, const PlacementAction& placement, std::span<const EdgeNode> edges) {
  EdgeId best = kCloud;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::uint64_t m = placement.mask(request.service_id); m; m &= m - 1) {
    const EdgeId e = std::countr_zero(m) + 1;
    const double d = distance(request.location, edges[static_cast<std::size_t>(e - 1)].position);
    if (d < best_dist) {  // ascending ids, strict: ties keep the lower id
      best_dist = d;
      best = e;
    }
  }
  return best;
}

double compute_delay(const ServiceRequest& request, EdgeId serving, std::span<const EdgeNode> edges,
                     const DelayModelParams& params) {
  if (serving == kCloud) return params.cloud_fallback_delay;
  const double d = distance(request.location, edges[static_cast<std::size_t>(serving - 1)].position);
  return params.proc_delay + params.per_meter_delay * d;
}

std::vector<double> utilization(const PlacementAction& placement, std::span<const ServiceSpec> services,
                                std::span<const EdgeNode> edges) {
  std::vector<double> load(edges.size(), 0.0);
  for (const auto& s : services) {
    for (std::uint64_t m = placement.mask(s.service_id); m; m &= m - 1) {
      load[static_cast<std::size_t>(std::countr_zero(m))] += s.resource_req;
    }
  }
  for (std::size_t e = 0; e < edges.size(); ++e) load[e] /= edges[e].capacity;
  return load;
}

bool capacity_feasible(const PlacementAction& placement, std::span<const ServiceSpec> services,
                       std::span<const EdgeNode> edges) {
  std::vector<double> load(edges.size(), 0.0);
  for (const auto& s : services) {
    for (std::uint64_t m = placement.mask(s.service_id); m; m &= m - 1) {
      const auto e = static_cast<std::size_t>(std::countr_zero(m));
      if (e >= edges.size()) return false;
      load[e] += s.resource_req;
    }
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (load[e] > edges[e].capacity) return false;
  }
  return true;
}

DistanceMatrix::DistanceMatrix(std::span<const ServiceRequest> requests, std::span<const EdgeNode> edges)
    : n_(requests.size()), e_(edges.size()), data_(requests.size() * edges.size()) {
  std::vector<double> xs(n_), ys(n_);
  for (std::size_t k = 0; k < n_; ++k) {
    xs[k] = requests[k].location.x;
    ys[k] = requests[k].location.y;
  }
  for (std::size_t e = 0; e < e_; ++e) {
    kernels::distances(xs, ys, edges[e].position.x, edges[e].position.y, {data_.data() + e * n_, n_});
  }
}

std::vector<DelayObservation> observe_delays(std::span<const ServiceRequest> requests,
                                             const PlacementAction& placement, const ScenarioConfig& cfg) {
  const DistanceMatrix dist(requests, cfg.edges);
  std::vector<DelayObservation> out;
  out.reserve(requests.size());
  for (std::size_t k = 0; k < requests.size(); ++k) {
    const auto& r = requests[k];
    EdgeId best = kCloud;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::uint64_t m = placement.mask(r.service_id); m; m &= m - 1) {
      const EdgeId e = std::countr_zero(m) + 1;
      const double d = dist.at(e, k);
      if (d < best_dist) {
        best_dist = d;
        best = e;
      }
    }
    const double delay = best == kCloud ? cfg.delay_model.cloud_fallback_delay
                                        : cfg.delay_model.proc_delay + cfg.delay_model.per_meter_delay * best_dist;
    out.push_back({r.vehicle_id, r.service_id, best, delay, r.time});
  }
  return out;
}

}  // namespace iovsim
