#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "iovsim/mobility.hpp"
#include "iovsim/netmodel.hpp"
#include "iovsim/scenario.hpp"

namespace iovsim {

/// Scores placements against one request snapshot:
///   cost = alpha * max_e util(e) + (1 - alpha) * max_s dbar_s / D_s
/// where dbar_s is the mean nearest-host delay over the snapshot's requests for s (cloud delay
/// when s has no instance). Services without requests in the snapshot do not enter the delay
/// term. With DelayNormalization::Raw the delay term is max_s dbar_s in ms.
///
/// Per-service mean delays are cached per host set, which makes re-scoring a neighbouring
/// placement O(S + E).
class PlacementEvaluator {
 public:
  PlacementEvaluator(std::span<const ServiceRequest> snapshot, const ScenarioConfig& cfg);

  const ScenarioConfig& config() const { return *cfg_; }
  std::size_t request_count(ServiceId s) const { return columns_[idx(s)].n; }

  /// Mean delay (ms) of s's requests under host mask; nullopt when s has no requests.
  std::optional<double> service_delay(ServiceId s, std::uint64_t mask) const;
  /// Delay term contribution of s (normalized or raw); 0 when s has no requests.
  double delay_term(ServiceId s, std::uint64_t mask) const;

  double cost(const PlacementAction& placement) const;
  double max_utilization(const PlacementAction& placement) const;
  double max_delay_term(const PlacementAction& placement) const;

 private:
  struct ServiceColumns {
    std::size_t n = 0;
    std::vector<double> delays;  // edge-major: delays[e * n + k]
    mutable std::vector<double> memo;  // by mask, NaN = not computed (dense when E is small)
  };
  static std::size_t idx(ServiceId s) { return static_cast<std::size_t>(s - 1); }
  double compute_mean(const ServiceColumns& c, std::uint64_t mask) const;

  const ScenarioConfig* cfg_;
  std::vector<ServiceColumns> columns_;
  bool dense_memo_ = false;
};

double objective(const PlacementAction& placement, std::span<const ServiceRequest> snapshot,
                 const ScenarioConfig& cfg);

struct OptimizeResult {
  PlacementAction placement;
  double cost = 0.0;
  double greedy_cost = 0.0;  // best constructive start before local search
  int improving_moves = 0;
};

/// Constructive start: single instance per service, the better of a cost-greedy assignment
/// (largest R_s first, cheapest feasible edge) and every feasible all-on-one-edge baseline.
/// Falls back to a capacity repair search; throws InfeasibleError when nothing fits.
PlacementAction greedy_placement(const PlacementEvaluator& eval);

/// Greedy construction followed by best-improvement local search (per-service host-set
/// reassignment, which covers relocate/add/remove, plus pairwise instance swaps between
/// services), also run from the incumbent when it is feasible. The result is capacity-feasible,
/// hosts every service, and never costs more than a feasible incumbent.
OptimizeResult optimize_placement_detailed(std::span<const ServiceRequest> snapshot, const ScenarioConfig& cfg,
                                           const std::optional<PlacementAction>& incumbent);

PlacementAction optimize_placement(std::span<const ServiceRequest> snapshot, const ScenarioConfig& cfg,
                                   const std::optional<PlacementAction>& incumbent);

inline constexpr int kOracleMaxServices = 3;
inline constexpr int kOracleMaxEdges = 3;

/// Global optimum by enumeration of all non-empty host sets per service (S <= 3, E <= 3).
/// Ties: fewest instances, then lexicographically smallest host lists in service order.
/// Throws std::length_error beyond the guard and InfeasibleError when no combination fits.
PlacementAction exhaustive_oracle(std::span<const ServiceRequest> snapshot, const ScenarioConfig& cfg);

/// Deterministic tie-break order: fewer instances first, then host lists compared
/// lexicographically service by service.
bool placement_precedes(const PlacementAction& a, const PlacementAction& b);

/// Demand-oblivious starting placement used before the first optimization: first-fit
/// decreasing (largest R_s first) into edges in id order, one instance per service.
PlacementAction cold_start_placement(const ScenarioConfig& cfg);

}  // namespace iovsim
