#include <sstream>

#include "doctest.h"
#include "iovsim/actor.hpp"
#include "iovsim/agent.hpp"
#include "support.hpp"

using namespace iovsim;

namespace {

FeedbackSample reported(ServiceId s, std::vector<double> delays) {
  FeedbackSample f;
  f.service_id = s;
  VehicleId v = 1;
  for (double d : delays) {
    f.reported_delays.push_back({v, d});
    f.true_delays.push_back({v++, d});
  }
  f.avg_reported = f.avg_true = delays.empty() ? 0.0 : mean_delay(f.true_delays);
  return f;
}

ScenarioConfig short_config(int horizon, std::uint64_t seed = 1) {
  auto cfg = default_scenario();
  cfg.horizon = horizon;
  cfg.seed = seed;
  return cfg;
}

std::vector<Vehicle> fleet(const ScenarioConfig& cfg, int count = 500) {
  return synthesize_vehicles(count, cfg.horizon, cfg.area, cfg.mobility, cfg.seed);
}

const std::vector<Vehicle>& default_fleet() {
  static const auto v = fleet(default_scenario());
  return v;
}

bool warm_up_oracle(const TickLog& log, const ScenarioConfig& cfg) {
  for (const auto& svc : cfg.services) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& f : log.feedback) {
      if (f.service_id != svc.service_id) continue;
      for (const auto& r : f.reported_delays) sum += r.delay;
      n += f.reported_delays.size();
    }
    if (n > 0 && sum / static_cast<double>(n) > svc.delay_threshold) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("reward is the mean reported delay of a sample") {
  CHECK(reward(reported(1, {10, 12, 14})) == 12.0);
  CHECK(reward(reported(1, {7})) == 7.0);
  CHECK_FALSE(reward(reported(1, {})).has_value());

  auto f = reported(2, {30, 30});
  f.reported_delays[1].delay = 4.0;
  CHECK(reward(f) == 17.0);
}

TEST_CASE("re-optimization threshold is strict") {
  CHECK(decide_reoptimize(0.2, 0.5));
  CHECK_FALSE(decide_reoptimize(0.5, 0.5));
  CHECK_FALSE(decide_reoptimize(0.9, 0.5));
}

TEST_CASE("training periods are uniform around the mean") {
  Rng rng(1);
  std::vector<int> hits(4, 0);
  double sum = 0.0;
  for (int i = 0; i < 30000; ++i) {
    const int p = draw_train_period(2, rng);
    REQUIRE(p >= 1);
    REQUIRE(p <= 3);
    ++hits[static_cast<std::size_t>(p)];
    sum += p;
  }
  for (int p = 1; p <= 3; ++p) CHECK(std::abs(hits[static_cast<std::size_t>(p)] - 10000) < 400);
  CHECK(sum / 30000.0 == doctest::Approx(2.0).epsilon(0.01));
  CHECK(draw_train_period(1, rng) == 1);
  CHECK_THROWS_AS(draw_train_period(0, rng), std::invalid_argument);
}

TEST_CASE("five vehicles with three of them compromised") {
  auto cfg = short_config(20);
  cfg.attack.enabled = true;
  cfg.attack.mode = AttackMode::Any;
  std::vector<Vehicle> cars;
  for (int v = 1; v <= 5; ++v) {
    cars.push_back({v, std::vector<std::optional<Point>>(20, Point{1000.0 * v, 4000.0})});
  }
  SybilRoster roster;
  roster.stolen_ids = {3, 4, 5};
  Simulation sim(cfg, cars, roster);
  sim.run();
  REQUIRE(sim.logs().size() == 20);
  for (const auto& log : sim.logs()) {
    std::size_t entries = 0;
    for (const auto& f : log.feedback) {
      REQUIRE(f.reported_delays.size() == f.true_delays.size());
      for (std::size_t i = 0; i < f.reported_delays.size(); ++i) {
        const auto id = f.reported_delays[i].vehicle_id;
        CHECK(id == f.true_delays[i].vehicle_id);
        if (id >= 3) {
          CHECK(std::count(cfg.attack.fake_delays.begin(), cfg.attack.fake_delays.end(), f.reported_delays[i].delay) ==
                1);
        } else {
          CHECK(f.reported_delays[i].delay == f.true_delays[i].delay);
        }
      }
      entries += f.reported_delays.size();
    }
    CHECK(entries == 5);
  }
}

TEST_CASE("a default run logs every tick and reruns byte for byte") {
  const auto cfg = default_scenario();
  const auto& cars = default_fleet();
  Simulation a(cfg, cars);
  a.run();
  REQUIRE(a.logs().size() == 900);
  for (int t = 1; t <= 900; ++t) CHECK(a.logs()[static_cast<std::size_t>(t - 1)].time == t);

  const auto b = run_simulation(cfg, cars);
  std::ostringstream sa, sb;
  write_ticklogs(a.logs(), sa);
  write_ticklogs(b, sb);
  const auto text = sa.str();
  CHECK(text == sb.str());
  CHECK(std::count(text.begin(), text.end(), '\n') == 900);

  int flagged = 0;
  for (const auto& log : a.logs()) {
    flagged += log.reoptimized;
    CHECK(capacity_feasible(log.action, cfg.services, cfg.edges));
    CHECK(log.q_value > 0.0);
    CHECK(log.q_value < 1.0);
  }
  CHECK(flagged == a.reoptimizations());
  CHECK(a.experiences_pushed() <= 900u);
  CHECK(a.replay().size() == std::min<std::size_t>(a.experiences_pushed(), 32));
  CHECK(a.training_rounds() > 0);
}

TEST_CASE("the re-optimization rule follows warm-up then the critic") {
  auto cfg = short_config(200, 3);
  cfg.attack.enabled = true;
  cfg.attack.proportion = 0.3;
  const auto cars = fleet(cfg);
  const auto logs = run_simulation(cfg, cars);
  for (const auto& log : logs) {
    if (log.feedback.empty()) {
      CHECK_FALSE(log.reoptimized);
    } else if (log.time <= cfg.training.batch_size) {
      CHECK(log.reoptimized == warm_up_oracle(log, cfg));
    } else {
      CHECK(log.reoptimized == (log.q_value < cfg.training.reopt_threshold));
    }
  }
}

TEST_CASE("placement only changes right after a flagged tick") {
  const auto cfg = short_config(300, 2);
  const auto logs = run_simulation(cfg, fleet(cfg));
  CHECK(logs.front().action == cold_start_placement(cfg));
  for (std::size_t i = 1; i < logs.size(); ++i) {
    if (!logs[i - 1].reoptimized) CHECK(logs[i].action == logs[i - 1].action);
  }
}

TEST_CASE("ticks without requests record nothing") {
  auto cfg = short_config(60);
  std::vector<Vehicle> cars;
  for (int v = 1; v <= 20; ++v) {
    Vehicle car{v, std::vector<std::optional<Point>>(60)};
    // Active only on even ticks.
    for (int t = 2; t <= 60; t += 2) car.trajectory[static_cast<std::size_t>(t - 1)] = Point{250.0 * v, 300.0 * v};
    cars.push_back(car);
  }
  Simulation sim(cfg, cars);
  std::size_t pushed = 0;
  while (!sim.finished()) {
    const auto& log = sim.step();
    if (log.time % 2 == 1) {
      CHECK(log.feedback.empty());
      CHECK_FALSE(log.reoptimized);
      CHECK(sim.experiences_pushed() == pushed);
      CHECK(log.state.demand == std::vector<double>(48, 0.0));
    } else {
      CHECK(sim.experiences_pushed() == ++pushed);
    }
  }
  CHECK(pushed == 30);
}

TEST_CASE("without compromised vehicles reported delays are the true ones") {
  auto cfg = short_config(150);
  cfg.attack.enabled = true;
  cfg.attack.proportion = 0.0;
  const auto cars = fleet(cfg);
  for (const auto& log : run_simulation(cfg, cars)) {
    for (const auto& f : log.feedback) {
      CHECK(f.reported_delays == f.true_delays);
      CHECK(f.avg_reported == f.avg_true);
    }
  }
}

TEST_CASE("no training happens before the replay holds a batch") {
  auto cfg = short_config(120);
  std::vector<Vehicle> cars;
  for (int v = 1; v <= 10; ++v) {
    Vehicle car{v, std::vector<std::optional<Point>>(120)};
    // Silent for the first 50 ticks.
    for (int t = 51; t <= 120; ++t) car.trajectory[static_cast<std::size_t>(t - 1)] = Point{900.0 * v, 5000.0};
    cars.push_back(car);
  }
  Simulation sim(cfg, cars);
  while (!sim.finished()) {
    sim.step();
    if (sim.replay().size() < static_cast<std::size_t>(cfg.training.batch_size)) CHECK(sim.training_rounds() == 0);
  }
  CHECK(sim.training_rounds() > 0);
}

TEST_CASE("fully compromised feedback yields optimistic targets") {
  auto cfg = short_config(80);
  cfg.attack.enabled = true;
  cfg.attack.proportion = 1.0;
  const auto cars = fleet(cfg, 200);
  Simulation sim(cfg, cars);
  sim.run();
  REQUIRE(sim.replay().size() > 0);
  for (std::size_t i = 0; i < sim.replay().size(); ++i) {
    CHECK(sim.replay().at(i).reward >= std::exp(-9.0 / 20.0) - 1e-15);
    CHECK(sim.replay().at(i).reward <= std::exp(-3.0 / 20.0) + 1e-15);
  }
}

TEST_CASE("attack settings do not change the traffic") {
  auto clean = short_config(100, 4);
  auto attacked = clean;
  attacked.attack.enabled = true;
  attacked.attack.proportion = 0.5;
  const auto cars = fleet(clean);
  const auto a = run_simulation(clean, cars);
  const auto b = run_simulation(attacked, cars);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].state == b[i].state);
    if (!(a[i].action == b[i].action)) break;
    REQUIRE(a[i].feedback.size() == b[i].feedback.size());
    for (std::size_t k = 0; k < a[i].feedback.size(); ++k) CHECK(a[i].feedback[k].true_delays == b[i].feedback[k].true_delays);
  }
}

TEST_CASE("tick log JSON carries both delay sequences") {
  auto cfg = short_config(3);
  cfg.attack.enabled = true;
  cfg.attack.proportion = 0.5;
  const auto logs = run_simulation(cfg, fleet(cfg, 20));
  const auto line = ticklog_json(logs[0]);
  CHECK(line.find('\n') == std::string::npos);
  for (const char* key : {"\"time\"", "\"reoptimized\"", "\"q_value\"", "\"action\"", "\"demand\"", "\"reported\"",
                          "\"true\""}) {
    CHECK(line.find(key) != std::string::npos);
  }
}

TEST_CASE("invalid scenarios are refused") {
  auto cfg = short_config(10);
  cfg.alpha = 2.0;
  const std::vector<Vehicle> none;
  CHECK_THROWS_AS(Simulation(cfg, none), ConfigError);
  Simulation sim(short_config(1), none);
  sim.step();
  CHECK(sim.finished());
  CHECK_THROWS_AS(sim.step(), std::logic_error);
}
