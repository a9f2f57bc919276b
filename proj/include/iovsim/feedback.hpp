#pragma once

#include <span>
#include <utility>
#include <vector>

#include "iovsim/common.hpp"
#include "iovsim/netmodel.hpp"

namespace iovsim {

struct VehicleDelay {
  VehicleId vehicle_id = 0;
  double delay = 0.0;  // ms
  friend bool operator==(const VehicleDelay&, const VehicleDelay&) = default;
};

/// Delay feedback for one (service, serving edge, tick). `true_delays` is ground truth; the
/// agent only ever reads `reported_delays`. Both list the same vehicles in the same order.
struct FeedbackSample {
  ServiceId service_id = 1;
  EdgeId edge_id = kCloud;
  Tick time = 1;
  std::vector<VehicleDelay> reported_delays;
  std::vector<VehicleDelay> true_delays;
  double avg_reported = 0.0;
  double avg_true = 0.0;
  friend bool operator==(const FeedbackSample&, const FeedbackSample&) = default;
};

double mean_delay(std::span<const VehicleDelay> delays);

/// Groups one tick's observations by (service, edge), ordered by service then edge (cloud first),
/// vehicles in observation order. Reported values start out equal to the true ones.
std::vector<FeedbackSample> aggregate_feedback(std::span<const DelayObservation> observations, Tick t);

}  // namespace iovsim
