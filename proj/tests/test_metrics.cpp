#include <numeric>

#include "doctest.h"
#include "iovsim/metrics.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace iovsim;
using iovsim::testing::random_vector;

namespace {

TickLog tick(Tick t, PlacementAction action, std::vector<FeedbackSample> fb = {}, bool reopt = false) {
  TickLog l;
  l.time = t;
  l.action = std::move(action);
  l.feedback = std::move(fb);
  l.reoptimized = reopt;
  return l;
}

FeedbackSample sample(ServiceId s, std::vector<std::pair<VehicleId, double>> delays) {
  FeedbackSample f;
  f.service_id = s;
  for (auto [v, d] : delays) {
    f.true_delays.push_back({v, d});
    f.reported_delays.push_back({v, 5.0});
  }
  f.avg_true = mean_delay(f.true_delays);
  f.avg_reported = 5.0;
  return f;
}

std::vector<TickLog> small_run(const ScenarioConfig& cfg, int horizon, std::uint64_t seed, double proportion) {
  auto c = cfg;
  c.horizon = horizon;
  c.seed = seed;
  c.attack.enabled = proportion > 0;
  c.attack.proportion = proportion;
  const auto cars = synthesize_vehicles(300, horizon, c.area, c.mobility, seed);
  return run_simulation(c, cars);
}

}  // namespace

TEST_CASE("Jain's index reference values") {
  CHECK(jains_index(std::vector<double>{0.5, 0.5, 0.5}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(jains_index(std::vector<double>{1, 0, 0, 0, 0, 0}) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  // (1+2+3)^2 / (3 * 14) = 36/42
  CHECK(jains_index(std::vector<double>{1, 2, 3}) == doctest::Approx(36.0 / 42.0).epsilon(1e-12));
  CHECK(jains_index(std::vector<double>{2, 1, 2, 1}) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK_THROWS_AS(jains_index(std::vector<double>{}), DomainError);
  CHECK_THROWS_AS(jains_index(std::vector<double>{0, 0}), DomainError);
  CHECK_THROWS_AS(jains_index(std::vector<double>{1, -1}), DomainError);
}

TEST_CASE("Jain's index is scale invariant and bounded") {
  Rng rng(10);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    auto x = random_vector(rng, n, 0.0, 3.0);
    const double j = jains_index(x);
    CHECK(j >= 1.0 / static_cast<double>(n) - 1e-12);
    CHECK(j <= 1.0 + 1e-12);
    const double c = std::uniform_real_distribution<double>(0.01, 100.0)(rng);
    for (double& v : x) v *= c;
    CHECK(jains_index(x) == doctest::Approx(j).epsilon(1e-12));
  }
}

TEST_CASE("re-optimization count") {
  PlacementAction p(1);
  std::vector<TickLog> logs;
  for (int t = 1; t <= 900; ++t) logs.push_back(tick(t, p, {}, t % 10 == 3 && t <= 870));
  CHECK(reopt_count(logs) == 87);
  const std::span<const TickLog> all(logs);
  CHECK(reopt_count(all.first(400)) + reopt_count(all.subspan(400)) == 87);
  CHECK(reopt_count(std::span<const TickLog>{}) == 0);
}

TEST_CASE("average service delay pools every request") {
  PlacementAction p(2);
  const std::vector<TickLog> logs{tick(1, p, {sample(1, {{1, 10.0}})}), tick(2, p, {sample(1, {{2, 20.0}})})};
  const auto d = avg_service_delay(logs);
  CHECK(d.at(1) == 15.0);
  CHECK(d.count(2) == 0);

  // Reported values never enter delay metrics.
  const std::vector<TickLog> mixed{tick(1, p, {sample(1, {{1, 10.0}, {2, 40.0}}), sample(2, {{3, 30.0}})})};
  CHECK(avg_service_delay(mixed).at(1) == 25.0);
  CHECK(avg_service_delay(mixed).at(2) == 30.0);
}

TEST_CASE("targeted delay keeps only roster vehicles") {
  PlacementAction p(2);
  const std::vector<TickLog> logs{
      tick(1, p, {sample(1, {{1, 10.0}, {2, 40.0}}), sample(2, {{2, 12.0}})}),
      tick(2, p, {sample(1, {{2, 20.0}})})};
  SybilRoster r;
  r.stolen_ids = {2};
  const auto t = targeted_delay(logs, r);
  CHECK(t.at(1) == 30.0);
  CHECK(t.at(2) == 12.0);
  CHECK(targeted_delay(logs, SybilRoster{}).empty());

  const std::vector<ServiceId> one{1}, both{1, 2};
  CHECK(targeted_delay_pooled(logs, r, one) == 30.0);
  CHECK(targeted_delay_pooled(logs, r, both) == doctest::Approx(24.0));
  CHECK_FALSE(targeted_delay_pooled(logs, SybilRoster{}, both).has_value());

  SybilRoster everyone;
  everyone.stolen_ids = {1, 2};
  CHECK(targeted_delay(logs, everyone) == avg_service_delay(logs));
}

TEST_CASE("resource usage of static and empty placements") {
  const auto cfg = default_scenario();
  auto p = PlacementAction(8);
  p.add(1, 1);
  p.add(8, 6);
  std::vector<TickLog> logs;
  for (int t = 1; t <= 5; ++t) logs.push_back(tick(t, p));
  const auto u = resource_usage(logs, cfg);
  CHECK(u == utilization(p, cfg.services, cfg.edges));
  CHECK(u[0] == doctest::Approx(5.0 / 60.0));
  CHECK(u[5] == doctest::Approx(0.4));

  std::vector<TickLog> idle;
  for (int t = 1; t <= 5; ++t) idle.push_back(tick(t, PlacementAction(8)));
  CHECK(resource_usage(idle, cfg) == std::vector<double>(6, 0.0));
  CHECK_THROWS_AS(fairness(idle, cfg, FairnessMode::TimeMeanUtilization), DomainError);
  CHECK_THROWS_AS(fairness(idle, cfg, FairnessMode::MeanPerTick), DomainError);
  CHECK(resource_usage(std::span<const TickLog>{}, cfg) == std::vector<double>(6, 0.0));
}

TEST_CASE("fairness aggregation modes") {
  const auto cfg = default_scenario();
  PlacementAction a(8), b(8);
  a.add(1, 1);                         // only edge 1 in use
  for (int e = 1; e <= 6; ++e) b.add(1, e);  // all edges, unequal shares
  const std::vector<TickLog> logs{tick(1, a), tick(2, b), tick(3, PlacementAction(8))};
  const double ja = jains_index(utilization(a, cfg.services, cfg.edges));
  const double jb = jains_index(utilization(b, cfg.services, cfg.edges));
  CHECK(fairness(logs, cfg, FairnessMode::MeanPerTick) == doctest::Approx((ja + jb) / 2.0));
  CHECK(fairness(logs, cfg, FairnessMode::TimeMeanUtilization) ==
        doctest::Approx(jains_index(resource_usage(logs, cfg))));
}

TEST_CASE("metrics recomputed from raw logs agree") {
  const auto cfg = default_scenario();
  const auto logs = small_run(cfg, 150, 6, 0.3);
  auto c = cfg;
  c.attack.enabled = true;
  c.attack.proportion = 0.3;
  c.seed = 6;
  const auto cars = synthesize_vehicles(300, 150, c.area, c.mobility, 6);
  const auto roster = build_roster(vehicle_ids(cars), c.attack, c.area, 6);

  std::map<ServiceId, std::pair<double, int>> all, tgt;
  std::vector<double> usage(6, 0.0);
  int flags = 0;
  for (const auto& l : logs) {
    flags += l.reoptimized ? 1 : 0;
    for (ServiceId s = 1; s <= 8; ++s) {
      for (EdgeId e : l.action.host_list(s)) usage[static_cast<std::size_t>(e - 1)] += cfg.service(s).resource_req / cfg.edge(e).capacity;
    }
    for (const auto& f : l.feedback) {
      for (const auto& d : f.true_delays) {
        all[f.service_id].first += d.delay;
        ++all[f.service_id].second;
        if (std::binary_search(roster.stolen_ids.begin(), roster.stolen_ids.end(), d.vehicle_id)) {
          tgt[f.service_id].first += d.delay;
          ++tgt[f.service_id].second;
        }
      }
    }
  }
  CHECK(reopt_count(logs) == flags);
  const auto avg = avg_service_delay(logs);
  CHECK(avg.size() == all.size());
  for (const auto& [s, a] : all) CHECK(avg.at(s) == doctest::Approx(a.first / a.second).epsilon(1e-12));
  const auto td = targeted_delay(logs, roster);
  CHECK(td.size() == tgt.size());
  for (const auto& [s, a] : tgt) CHECK(td.at(s) == doctest::Approx(a.first / a.second).epsilon(1e-12));
  const auto ru = resource_usage(logs, cfg);
  for (std::size_t e = 0; e < 6; ++e) CHECK(ru[e] == doctest::Approx(usage[e] / 150.0).epsilon(1e-12));
  const double s1 = std::accumulate(ru.begin(), ru.end(), 0.0), s2 = std::inner_product(ru.begin(), ru.end(), ru.begin(), 0.0);
  CHECK(fairness(logs, cfg, FairnessMode::TimeMeanUtilization) == doctest::Approx(s1 * s1 / (6.0 * s2)).epsilon(1e-12));
}

TEST_CASE("attacked services per mode") {
  const auto cfg = default_scenario();
  CHECK(attacked_services(cfg, AttackMode::Any) == std::vector<ServiceId>{1, 2, 3, 4, 5, 6, 7, 8});
  CHECK(attacked_services(cfg, AttackMode::Selective) == std::vector<ServiceId>{1, 2, 3, 4});
}

TEST_CASE("metric rows and their exports") {
  const auto cfg = default_scenario();
  const auto logs = small_run(cfg, 60, 2, 0.0);
  const auto rows = run_metric_rows(logs, cfg, SybilRoster{}, "NA", 2);
  REQUIRE(!rows.empty());
  CHECK(rows.front().metric == "reopt_count");
  std::size_t usage_rows = 0;
  for (const auto& r : rows) {
    CHECK(r.scope == "NA");
    CHECK(r.run_seed == 2u);
    CHECK(r.metric != "targeted_delay_ms");
    usage_rows += r.metric == "resource_usage";
  }
  CHECK(usage_rows == 6);

  const auto csv = metrics_csv(rows);
  CHECK(csv.rfind("metric,scope,key,value,run_seed\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(rows.size() + 1));
  const auto j = nlohmann::json::parse(metrics_json(rows));
  REQUIRE(j.size() == rows.size());
  CHECK(j[0]["metric"] == "reopt_count");
}

TEST_CASE("formatted values round-trip") {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::uniform_real_distribution<double>(-1e6, 1e6)(rng);
    CHECK(std::stod(format_value(v)) == v);
  }
  CHECK(format_value(15.0) == "15");
  CHECK(format_value(0.1) == "0.1");
}
