#include "iovsim/feedback.hpp"

#include <algorithm>
#include <map>

namespace iovsim {

double mean_delay(std::span<const VehicleDelay> delays) {
  if (delays.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& d : delays) sum += d.delay;
  return sum / static_cast<double>(delays.size());
}

std::vector<FeedbackSample> aggregate_feedback(std::span<const DelayObservation> observations, Tick t) {
  std::map<std::pair<ServiceId, EdgeId>, FeedbackSample> groups;
  for (const auto& o : observations) {
    auto& g = groups[{o.service_id, o.edge_id}];
    g.service_id = o.service_id;
    g.edge_id = o.edge_id;
    g.time = t;
    g.true_delays.push_back({o.vehicle_id, o.true_delay});
  }
  std::vector<FeedbackSample> out;
  out.reserve(groups.size());
  for (auto& [key, g] : groups) {
    g.reported_delays = g.true_delays;
    g.avg_true = mean_delay(g.true_delays);
    g.avg_reported = g.avg_true;
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace iovsim
