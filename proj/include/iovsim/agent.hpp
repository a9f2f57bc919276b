#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iovsim/adversary.hpp"
#include "iovsim/critic.hpp"
#include "iovsim/feedback.hpp"
#include "iovsim/mobility.hpp"
#include "iovsim/netmodel.hpp"
#include "iovsim/scenario.hpp"

namespace iovsim {

struct TickLog {
  Tick time = 1;
  StateObservation state;
  PlacementAction action;  // placement in force while this tick's requests were served
  std::vector<FeedbackSample> feedback;
  bool reoptimized = false;
  double q_value = 0.0;
  friend bool operator==(const TickLog&, const TickLog&) = default;
};

/// Mean reported delay of a sample (ms), or nullopt for a sample with no entries.
std::optional<double> reward(const FeedbackSample& sample);

/// Strict: a quality equal to the threshold keeps the current placement.
inline bool decide_reoptimize(double q_value, double threshold) { return q_value < threshold; }

/// Ticks until the next training round, uniform on {1, ..., 2 * mean - 1}.
int draw_train_period(int mean, Rng& rng);

/// One run of the placement agent over the scenario horizon.
///
/// Each tick: generate requests, serve them under the placement in force, let the adversary
/// rewrite reported delays, aggregate rewards, record the experience, train the critic when the
/// current random period has elapsed, and ask the critic whether to re-optimize. During the first
/// batch_size ticks the critic is not trusted yet and the agent re-optimizes whenever some
/// service's reported mean delay exceeds its threshold.
///
/// Every random draw comes from a stream keyed by cfg.seed, so two runs that differ only in the
/// attack settings see the same vehicles and the same requests.
class Simulation {
 public:
  /// `vehicles` must outlive the simulation. The roster is built from cfg.attack and cfg.seed.
  Simulation(const ScenarioConfig& cfg, const std::vector<Vehicle>& vehicles);
  Simulation(const ScenarioConfig& cfg, const std::vector<Vehicle>& vehicles, SybilRoster roster);

  bool finished() const { return next_tick_ > cfg_.horizon; }
  Tick next_tick() const { return next_tick_; }

  /// Runs the next tick and returns its log.
  const TickLog& step();
  /// Runs the remaining ticks.
  void run();

  const std::vector<TickLog>& logs() const { return logs_; }
  std::vector<TickLog> take_logs() { return std::move(logs_); }

  const ScenarioConfig& config() const { return cfg_; }
  const SybilRoster& roster() const { return roster_; }
  const PlacementAction& placement() const { return placement_; }
  const CriticParameters& critic() const { return critic_; }
  const ReplayMemory& replay() const { return replay_; }
  int reoptimizations() const { return reoptimizations_; }
  int training_rounds() const { return training_rounds_; }
  std::size_t experiences_pushed() const { return experiences_; }

 private:
  bool warm_up_trigger(std::span<const FeedbackSample> feedback) const;

  ScenarioConfig cfg_;
  const std::vector<Vehicle>& vehicles_;
  SybilRoster roster_;
  PlacementAction placement_;
  CriticParameters critic_;
  ReplayMemory replay_;
  Rng train_rng_;
  Rng period_rng_;
  Tick next_tick_ = 1;
  Tick next_training_ = 1;
  int reoptimizations_ = 0;
  int training_rounds_ = 0;
  std::size_t experiences_ = 0;
  std::vector<TickLog> logs_;
};

/// Ids of all vehicles, ascending.
std::vector<VehicleId> vehicle_ids(const std::vector<Vehicle>& vehicles);

/// Convenience: a complete run's logs.
std::vector<TickLog> run_simulation(const ScenarioConfig& cfg, const std::vector<Vehicle>& vehicles);

/// One JSON object per line: time, reoptimized, q_value, action host lists, state demand and
/// every feedback sample with both delay sequences.
std::string ticklog_json(const TickLog& log);
void write_ticklogs(std::span<const TickLog> logs, std::ostream& out);
void write_ticklogs(std::span<const TickLog> logs, const std::filesystem::path& path);

}  // namespace iovsim
