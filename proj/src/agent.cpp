#include "iovsim/agent.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "iovsim/actor.hpp"
#include "json.hpp"
#include "log.hpp"

namespace iovsim {

std::optional<double> reward(const FeedbackSample& sample) {
  if (sample.reported_delays.empty()) return std::nullopt;
  return mean_delay(sample.reported_delays);
}

int draw_train_period(int mean, Rng& rng) {
  if (mean < 1) throw std::invalid_argument("train period mean must be >= 1");
  return std::uniform_int_distribution<int>(1, 2 * mean - 1)(rng);
}

std::vector<VehicleId> vehicle_ids(const std::vector<Vehicle>& vehicles) {
  std::vector<VehicleId> ids;
  ids.reserve(vehicles.size());
  for (const auto& v : vehicles) ids.push_back(v.vehicle_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

Simulation::Simulation(const ScenarioConfig& cfg, const std::vector<Vehicle>& vehicles)
    : Simulation(cfg, vehicles, build_roster(vehicle_ids(vehicles), cfg.attack, cfg.area, cfg.seed)) {}

Simulation::Simulation(const ScenarioConfig& cfg, const std::vector<Vehicle>& vehicles, SybilRoster roster)
    : cfg_(cfg),
      vehicles_(vehicles),
      roster_(std::move(roster)),
      placement_(cold_start_placement(cfg)),
      critic_(make_critic(cfg, cfg.seed)),
      replay_(static_cast<std::size_t>(cfg.training.replay_capacity)),
      train_rng_(make_stream(cfg.seed, {stream::kTraining})),
      period_rng_(make_stream(cfg.seed, {stream::kTraining, 1})) {
  if (const auto report = validate_scenario(cfg_); !report.ok()) {
    throw ConfigError("scenario is not runnable: " + report.violations.front());
  }
  next_training_ = draw_train_period(cfg_.training.train_period_mean, period_rng_);
  logs_.reserve(static_cast<std::size_t>(cfg_.horizon));
}

bool Simulation::warm_up_trigger(std::span<const FeedbackSample> feedback) const {
  std::vector<double> sum(static_cast<std::size_t>(cfg_.num_services()), 0.0);
  std::vector<std::size_t> n(sum.size(), 0);
  for (const auto& f : feedback) {
    const auto i = static_cast<std::size_t>(f.service_id - 1);
    for (const auto& r : f.reported_delays) sum[i] += r.delay;
    n[i] += f.reported_delays.size();
  }
  for (std::size_t i = 0; i < sum.size(); ++i) {
    if (n[i] && sum[i] / static_cast<double>(n[i]) > cfg_.services[i].delay_threshold) return true;
  }
  return false;
}

const TickLog& Simulation::step() {
  if (finished()) throw std::logic_error("simulation already reached its horizon");
  const Tick t = next_tick_++;
  const auto E = cfg_.num_edges();

  const auto requests = generate_requests(vehicles_, cfg_.num_services(), t, cfg_.seed);
  const auto observations = observe_delays(requests, placement_, cfg_);

  TickLog log;
  log.time = t;
  log.action = placement_;
  log.feedback = aggregate_feedback(observations, t);
  if (!roster_.empty()) {
    for (auto& f : log.feedback) {
      Rng rng = poison_stream(cfg_.seed, t, f.service_id, f.edge_id);
      f = poison(std::move(f), roster_, cfg_.attack, rng);
    }
  }

  double reward_sum = 0.0;
  int rewarded = 0;
  for (const auto& f : log.feedback) {
    if (auto r = reward(f)) {
      reward_sum += *r;
      ++rewarded;
    }
  }

  log.state = build_state(requests, cfg_);
  const auto action = placement_.encode(E);
  if (rewarded > 0) {
    const double target = target_value(reward_sum / rewarded, cfg_.training.quality_scale);
    replay_.push({log.state, action, target, std::nullopt});
    ++experiences_;
  }

  if (t >= next_training_) {
    bool trained = false;
    for (int k = 0; k < cfg_.training.steps_per_train; ++k) {
      if (!train_step(critic_, replay_, cfg_.training, train_rng_)) break;
      trained = true;
    }
    if (trained) ++training_rounds_;
    next_training_ = t + draw_train_period(cfg_.training.train_period_mean, period_rng_);
  }

  log.q_value = quality(critic_, log.state, action);
  if (rewarded > 0) {
    const bool warm_up = t <= cfg_.training.batch_size;
    log.reoptimized = warm_up ? warm_up_trigger(log.feedback)
                              : decide_reoptimize(log.q_value, cfg_.training.reopt_threshold);
  }
  if (log.reoptimized) {
    placement_ = optimize_placement(requests, cfg_, placement_);
    ++reoptimizations_;
    log::debug("t={} q={:.4f} re-optimized: {}", t, log.q_value, placement_.to_string());
  }

  logs_.push_back(std::move(log));
  return logs_.back();
}

void Simulation::run() {
  while (!finished()) step();
}

std::vector<TickLog> run_simulation(const ScenarioConfig& cfg, const std::vector<Vehicle>& vehicles) {
  Simulation sim(cfg, vehicles);
  sim.run();
  return sim.take_logs();
}

namespace {

nlohmann::json delays_json(const std::vector<VehicleDelay>& ds) {
  auto arr = nlohmann::json::array();
  for (const auto& d : ds) arr.push_back({d.vehicle_id, d.delay});
  return arr;
}

}  // namespace

std::string ticklog_json(const TickLog& log) {
  nlohmann::json j;
  j["time"] = log.time;
  j["reoptimized"] = log.reoptimized;
  j["q_value"] = log.q_value;
  auto hosts = nlohmann::json::array();
  for (ServiceId s = 1; s <= log.action.num_services(); ++s) hosts.push_back(log.action.host_list(s));
  j["action"] = hosts;
  j["state"] = {{"edges", log.state.edges}, {"services", log.state.services}, {"demand", log.state.demand}};
  auto fb = nlohmann::json::array();
  for (const auto& f : log.feedback) {
    fb.push_back({{"service_id", f.service_id},
                  {"edge_id", f.edge_id},
                  {"avg_reported", f.avg_reported},
                  {"avg_true", f.avg_true},
                  {"reported", delays_json(f.reported_delays)},
                  {"true", delays_json(f.true_delays)}});
  }
  j["feedback"] = fb;
  return j.dump();
}

void write_ticklogs(std::span<const TickLog> logs, std::ostream& out) {
  for (const auto& l : logs) out << ticklog_json(l) << '\n';
}

void write_ticklogs(std::span<const TickLog> logs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write tick log '" + path.string() + "'");
  write_ticklogs(logs, out);
  if (!out) throw IoError("failed writing tick log '" + path.string() + "'");
}

}  // namespace iovsim
