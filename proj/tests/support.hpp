#pragma once

// Small builders and random generators shared by the test suites.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "iovsim/common.hpp"
#include "iovsim/mobility.hpp"
#include "iovsim/netmodel.hpp"
#include "iovsim/scenario.hpp"

namespace iovsim::testing {

inline ScenarioConfig tiny_config(std::vector<double> resources, std::vector<double> thresholds,
                                  std::vector<EdgeNode> edges, double alpha = 0.5) {
  ScenarioConfig cfg;
  for (std::size_t i = 0; i < resources.size(); ++i) {
    cfg.services.push_back({static_cast<ServiceId>(i + 1), resources[i], thresholds[i]});
  }
  cfg.edges = std::move(edges);
  cfg.alpha = alpha;
  return cfg;
}

inline ServiceRequest request_at(ServiceId s, Point p, VehicleId v = 1, Tick t = 1) { return {v, s, p, t}; }

/// Random small instance: S services and E edges with random positions, requirements and
/// capacities, plus a random request snapshot. Capacities are drawn so most instances are
/// feasible but some are tight.
struct SmallInstance {
  ScenarioConfig cfg;
  std::vector<ServiceRequest> snapshot;
};

inline SmallInstance random_instance(std::uint64_t seed, int S, int E) {
  Rng rng(seed);
  std::uniform_real_distribution<double> pos(0.0, 10000.0);
  std::uniform_int_distribution<int> req(1, 8);
  std::uniform_int_distribution<int> cap(4, 16);
  std::uniform_int_distribution<int> thr(10, 30);
  std::uniform_int_distribution<int> nreq(0, 12);
  std::uniform_real_distribution<double> alpha(0.0, 1.0);

  SmallInstance inst;
  auto& cfg = inst.cfg;
  for (int s = 1; s <= S; ++s) {
    cfg.services.push_back({s, static_cast<double>(req(rng)), static_cast<double>(thr(rng))});
  }
  for (int e = 1; e <= E; ++e) {
    const double x = pos(rng);
    cfg.edges.push_back({e, {x, pos(rng)}, static_cast<double>(cap(rng))});
  }
  // Quarter-step alphas keep some instances on exact ties.
  cfg.alpha = std::round(alpha(rng) * 4.0) / 4.0;
  const int n = nreq(rng);
  std::uniform_int_distribution<int> svc(1, S);
  for (int k = 0; k < n; ++k) {
    const double x = pos(rng);
    inst.snapshot.push_back({k + 1, svc(rng), {x, pos(rng)}, 1});
  }
  return inst;
}

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

/// Fresh empty directory under the system temp dir, removed when the guard goes away.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("iovsim-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace iovsim::testing
