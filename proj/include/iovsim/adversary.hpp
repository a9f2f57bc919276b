#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "iovsim/common.hpp"
#include "iovsim/feedback.hpp"
#include "iovsim/scenario.hpp"

namespace iovsim {

/// Identities under the attacker's control and where the matching Sybil nodes were planted.
/// Positions are kept for the record only; delays are still computed at the real vehicle.
struct SybilRoster {
  std::vector<VehicleId> stolen_ids;  // ascending
  std::map<VehicleId, Point> deployment_positions;

  bool contains(VehicleId id) const;
  std::size_t size() const { return stolen_ids.size(); }
  bool empty() const { return stolen_ids.empty(); }
  friend bool operator==(const SybilRoster&, const SybilRoster&) = default;
};

/// round(proportion * |vehicle_ids|) distinct identities chosen uniformly.
///
/// The ids are shuffled once with `rng` and a prefix is taken, so for one stream the roster at a
/// lower proportion is a subset of the roster at a higher one. A positive proportion that rounds
/// to zero logs a warning and yields an empty roster.
SybilRoster compromise(std::span<const VehicleId> vehicle_ids, const AttackConfig& cfg, Rng& rng);

/// Uniform positions over the whole area, one per stolen identity (in id order).
SybilRoster deploy(SybilRoster roster, Area area, Rng& rng);

/// True when entries of this service are rewritten under `cfg`.
bool service_targeted(const AttackConfig& cfg, ServiceId s);

/// Replaces the reported delay of every compromised vehicle in a targeted sample with a uniform
/// draw from cfg.fake_delays and recomputes avg_reported. Nothing else changes.
FeedbackSample poison(FeedbackSample sample, const SybilRoster& roster, const AttackConfig& cfg, Rng& rng);

/// Stream used for one sample's fake-delay draws, so samples can be poisoned in any order.
Rng poison_stream(std::uint64_t seed, Tick t, ServiceId s, EdgeId e);

/// Both attack set-up phases for one run: compromise on {seed, compromise} then deploy on
/// {seed, deploy}. Empty when the attack is disabled.
SybilRoster build_roster(std::span<const VehicleId> vehicle_ids, const AttackConfig& cfg, Area area,
                         std::uint64_t seed);

/// CSV `vehicle_id,x_m,y_m`.
void write_roster_csv(const SybilRoster& roster, const std::filesystem::path& path);

}  // namespace iovsim
