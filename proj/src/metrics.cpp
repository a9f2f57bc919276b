#include "iovsim/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "iovsim/netmodel.hpp"
#include "json.hpp"

namespace iovsim {

namespace {

struct Accumulator {
  double sum = 0.0;
  std::size_t n = 0;
};

std::map<ServiceId, double> means(const std::map<ServiceId, Accumulator>& acc) {
  std::map<ServiceId, double> out;
  for (const auto& [s, a] : acc) {
    if (a.n) out[s] = a.sum / static_cast<double>(a.n);
  }
  return out;
}

}  // namespace

int reopt_count(std::span<const TickLog> logs) {
  return static_cast<int>(std::count_if(logs.begin(), logs.end(), [](const TickLog& l) { return l.reoptimized; }));
}

std::map<ServiceId, double> avg_service_delay(std::span<const TickLog> logs) {
  std::map<ServiceId, Accumulator> acc;
  for (const auto& l : logs) {
    for (const auto& f : l.feedback) {
      auto& a = acc[f.service_id];
      for (const auto& d : f.true_delays) a.sum += d.delay;
      a.n += f.true_delays.size();
    }
  }
  return means(acc);
}

std::map<ServiceId, double> targeted_delay(std::span<const TickLog> logs, const SybilRoster& roster) {
  std::map<ServiceId, Accumulator> acc;
  if (roster.empty()) return {};
  for (const auto& l : logs) {
    for (const auto& f : l.feedback) {
      for (const auto& d : f.true_delays) {
        if (roster.contains(d.vehicle_id)) {
          auto& a = acc[f.service_id];
          a.sum += d.delay;
          ++a.n;
        }
      }
    }
  }
  return means(acc);
}

std::optional<double> targeted_delay_pooled(std::span<const TickLog> logs, const SybilRoster& roster,
                                            std::span<const ServiceId> services) {
  Accumulator a;
  for (const auto& l : logs) {
    for (const auto& f : l.feedback) {
      if (std::find(services.begin(), services.end(), f.service_id) == services.end()) continue;
      for (const auto& d : f.true_delays) {
        if (roster.contains(d.vehicle_id)) {
          a.sum += d.delay;
          ++a.n;
        }
      }
    }
  }
  if (!a.n) return std::nullopt;
  return a.sum / static_cast<double>(a.n);
}

std::vector<double> resource_usage(std::span<const TickLog> logs, const ScenarioConfig& cfg) {
  std::vector<double> sum(cfg.edges.size(), 0.0);
  if (logs.empty()) return sum;
  for (const auto& l : logs) {
    const auto u = utilization(l.action, cfg.services, cfg.edges);
    for (std::size_t e = 0; e < sum.size(); ++e) sum[e] += u[e];
  }
  for (double& v : sum) v /= static_cast<double>(logs.size());
  return sum;
}

double jains_index(std::span<const double> x) {
  if (x.empty()) throw DomainError("Jain's index of an empty vector");
  double s = 0.0;
  double sq = 0.0;
  for (double v : x) {
    if (!(v >= 0.0)) throw DomainError("Jain's index needs non-negative finite values");
    s += v;
    sq += v * v;
  }
  if (sq == 0.0) throw DomainError("Jain's index is undefined for an all-zero vector");
  return s * s / (static_cast<double>(x.size()) * sq);
}

double fairness(std::span<const TickLog> logs, const ScenarioConfig& cfg, FairnessMode mode) {
  if (mode == FairnessMode::TimeMeanUtilization) return jains_index(resource_usage(logs, cfg));
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& l : logs) {
    const auto u = utilization(l.action, cfg.services, cfg.edges);
    if (std::all_of(u.begin(), u.end(), [](double v) { return v == 0.0; })) continue;
    sum += jains_index(u);
    ++n;
  }
  if (!n) throw DomainError("no tick has a placement that uses capacity");
  return sum / static_cast<double>(n);
}

std::vector<ServiceId> attacked_services(const ScenarioConfig& cfg, AttackMode mode) {
  std::vector<ServiceId> out;
  for (const auto& s : cfg.services) {
    AttackConfig probe = cfg.attack;
    probe.mode = mode;
    if (service_targeted(probe, s.service_id)) out.push_back(s.service_id);
  }
  return out;
}

std::vector<MetricRow> run_metric_rows(std::span<const TickLog> logs, const ScenarioConfig& cfg,
                                       const SybilRoster& roster, const std::string& scope, std::uint64_t run_seed) {
  std::vector<MetricRow> rows;
  auto add = [&](std::string metric, std::string key, double v) {
    rows.push_back({std::move(metric), scope, std::move(key), v, run_seed});
  };
  add("reopt_count", "all", reopt_count(logs));
  for (const auto& [s, v] : avg_service_delay(logs)) add("avg_service_delay_ms", std::to_string(s), v);
  for (const auto& [s, v] : targeted_delay(logs, roster)) add("targeted_delay_ms", std::to_string(s), v);
  const auto usage = resource_usage(logs, cfg);
  for (std::size_t e = 0; e < usage.size(); ++e) add("resource_usage", std::to_string(e + 1), usage[e]);
  add("jains_index", "all", fairness(logs, cfg, cfg.fairness));
  return rows;
}

std::string format_value(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string metrics_csv(std::span<const MetricRow> rows) {
  std::ostringstream os;
  os << "metric,scope,key,value,run_seed\n";
  for (const auto& r : rows) {
    os << r.metric << ',' << r.scope << ',' << r.key << ',' << format_value(r.value) << ',' << r.run_seed << '\n';
  }
  return os.str();
}

std::string metrics_json(std::span<const MetricRow> rows) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back(
        {{"metric", r.metric}, {"scope", r.scope}, {"key", r.key}, {"value", r.value}, {"run_seed", r.run_seed}});
  }
  return arr.dump(2) + "\n";
}

}  // namespace iovsim
