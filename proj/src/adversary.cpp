#include "iovsim/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "log.hpp"

namespace iovsim {

bool SybilRoster::contains(VehicleId id) const {
  return std::binary_search(stolen_ids.begin(), stolen_ids.end(), id);
}

SybilRoster compromise(std::span<const VehicleId> vehicle_ids, const AttackConfig& cfg, Rng& rng) {
  if (cfg.proportion < 0.0 || cfg.proportion > 1.0) {
    throw std::invalid_argument("attack proportion must be in [0, 1]");
  }
  SybilRoster roster;
  const auto count = static_cast<std::size_t>(std::llround(cfg.proportion * static_cast<double>(vehicle_ids.size())));
  if (count == 0) {
    if (cfg.proportion > 0.0) {
      log::warn("attack proportion {} of {} vehicles rounds to no compromised identities", cfg.proportion,
                vehicle_ids.size());
    }
    return roster;
  }
  std::vector<VehicleId> ids(vehicle_ids.begin(), vehicle_ids.end());
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw std::invalid_argument("duplicate vehicle id");
  std::shuffle(ids.begin(), ids.end(), rng);
  roster.stolen_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(roster.stolen_ids.begin(), roster.stolen_ids.end());
  return roster;
}

SybilRoster deploy(SybilRoster roster, Area area, Rng& rng) {
  std::uniform_real_distribution<double> ux(0.0, area.width);
  std::uniform_real_distribution<double> uy(0.0, area.height);
  roster.deployment_positions.clear();
  for (VehicleId id : roster.stolen_ids) {
    const double x = ux(rng);
    roster.deployment_positions[id] = {x, uy(rng)};
  }
  return roster;
}

bool service_targeted(const AttackConfig& cfg, ServiceId s) {
  if (cfg.mode == AttackMode::Any) return true;
  return std::find(cfg.selective_services.begin(), cfg.selective_services.end(), s) != cfg.selective_services.end();
}

FeedbackSample poison(FeedbackSample sample, const SybilRoster& roster, const AttackConfig& cfg, Rng& rng) {
  if (roster.empty() || !service_targeted(cfg, sample.service_id)) return sample;
  if (cfg.fake_delays.empty()) throw std::invalid_argument("fake_delays must not be empty");
  std::uniform_int_distribution<std::size_t> pick(0, cfg.fake_delays.size() - 1);
  bool touched = false;
  for (auto& entry : sample.reported_delays) {
    if (roster.contains(entry.vehicle_id)) {
      entry.delay = cfg.fake_delays[pick(rng)];
      touched = true;
    }
  }
  if (touched) sample.avg_reported = mean_delay(sample.reported_delays);
  return sample;
}

Rng poison_stream(std::uint64_t seed, Tick t, ServiceId s, EdgeId e) {
  return make_stream(seed, {stream::kPoison, static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(s),
                            static_cast<std::uint64_t>(e)});
}

SybilRoster build_roster(std::span<const VehicleId> vehicle_ids, const AttackConfig& cfg, Area area,
                         std::uint64_t seed) {
  if (!cfg.enabled) return {};
  Rng pick = make_stream(seed, {stream::kCompromise});
  Rng place = make_stream(seed, {stream::kDeploy});
  return deploy(compromise(vehicle_ids, cfg, pick), area, place);
}

void write_roster_csv(const SybilRoster& roster, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write roster '" + path.string() + "'");
  out << "vehicle_id,x_m,y_m\n";
  char buf[64];
  for (VehicleId id : roster.stolen_ids) {
    const auto it = roster.deployment_positions.find(id);
    out << id;
    if (it != roster.deployment_positions.end()) {
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g", it->second.x, it->second.y);
      out << buf;
    } else {
      out << ",,";
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing roster '" + path.string() + "'");
}

}  // namespace iovsim
