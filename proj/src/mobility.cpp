#include "iovsim/mobility.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "log.hpp"

namespace iovsim {

namespace {

constexpr double kEarthRadius = 6371008.8;  // mean radius, meters

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Fix {
  std::int64_t timestamp;
  Point position;
};

}  // namespace

std::size_t Vehicle::fix_count() const {
  return static_cast<std::size_t>(std::count_if(trajectory.begin(), trajectory.end(),
                                                [](const auto& p) { return p.has_value(); }));
}

Point project(LatLon p, LatLon origin, double standard_parallel) {
  constexpr double deg = std::numbers::pi / 180.0;
  return {kEarthRadius * (p.lon - origin.lon) * deg * std::cos(standard_parallel * deg),
          kEarthRadius * (p.lat - origin.lat) * deg};
}

TraceOptions trace_options(const ScenarioConfig& cfg) {
  const auto& m = cfg.mobility;
  return {m.trace_bbox, m.projection_origin, cfg.horizon, cfg.area, m.trace_window_start, m.trace_window_end};
}

TraceParseResult parse_cabspotting(const std::filesystem::path& dir, const TraceOptions& opts) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("trace directory '" + dir.string() + "' does not exist");

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (!entry.is_regular_file() || name.empty() || name[0] == '_' || name[0] == '.') continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  TraceParseResult result;
  const double mid_lat = 0.5 * (opts.bbox.south_west.lat + opts.bbox.north_east.lat);
  std::vector<std::vector<Fix>> fixes(files.size());
  std::int64_t t_min = std::numeric_limits<std::int64_t>::max();
  std::int64_t t_max = std::numeric_limits<std::int64_t>::min();

  for (std::size_t f = 0; f < files.size(); ++f) {
    std::ifstream in(files[f]);
    if (!in) throw IoError("cannot read trace file '" + files[f].string() + "'");
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::istringstream fields(line);
      double lat = 0, lon = 0;
      int occupancy = 0;
      std::int64_t ts = 0;
      std::string extra;
      if (!(fields >> lat >> lon >> occupancy >> ts) || (fields >> extra)) {
        ++result.malformed_lines;
        continue;
      }
      if ((opts.window_start && ts < *opts.window_start) || (opts.window_end && ts > *opts.window_end)) continue;
      const Point pos = project({lat, lon}, opts.origin, mid_lat);
      if (!opts.bbox.contains({lat, lon}) || !opts.area.contains(pos)) {
        ++result.fixes_outside;
        continue;
      }
      fixes[f].push_back({ts, pos});
      t_min = std::min(t_min, ts);
      t_max = std::max(t_max, ts);
    }
  }
  if (result.malformed_lines > 0) {
    log::warn("trace: skipped {} malformed line(s) in {}", result.malformed_lines, dir.string());
  }

  const auto horizon = static_cast<std::int64_t>(opts.horizon);
  const std::int64_t span = t_max >= t_min ? t_max - t_min : 0;
  for (std::size_t f = 0; f < files.size(); ++f) {
    Vehicle v;
    v.vehicle_id = static_cast<VehicleId>(f + 1);
    v.trajectory.assign(static_cast<std::size_t>(opts.horizon), std::nullopt);
    std::vector<std::int64_t> latest(static_cast<std::size_t>(opts.horizon), std::numeric_limits<std::int64_t>::min());
    for (const Fix& fix : fixes[f]) {
      std::int64_t bin = 0;
      if (span > 0) {
        // Uniform bins over [t_min, t_max]; the final instant falls in the last bin.
        const long double frac = static_cast<long double>(fix.timestamp - t_min) / static_cast<long double>(span);
        bin = std::min<std::int64_t>(horizon - 1, static_cast<std::int64_t>(frac * static_cast<long double>(horizon)));
      }
      const auto b = static_cast<std::size_t>(bin);
      // Files are newest-first, so on equal timestamps the earlier line is the later fix.
      if (fix.timestamp > latest[b]) {
        latest[b] = fix.timestamp;
        v.trajectory[b] = fix.position;
      }
    }
    result.vehicles.push_back(std::move(v));
  }
  return result;
}

std::vector<Vehicle> synthesize_vehicles(int count, int horizon, Area area, const MobilityConfig& mob,
                                         std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("synthesize_vehicles: count must be >= 1");
  if (horizon < 1) throw std::invalid_argument("synthesize_vehicles: horizon must be >= 1");

  // Attraction point positions per tick, on their own streams so vehicles never perturb them.
  std::vector<std::vector<Point>> centers(static_cast<std::size_t>(horizon));
  if (mob.hotspot_speed > 0.0) {
    const double hop = mob.hotspot_speed * mob.tick_seconds;
    for (int h = 0; h < mob.hotspots; ++h) {
      Rng rng = make_stream(seed, {stream::kMobility, 0x686f74, 0x6d6f76, static_cast<std::uint64_t>(h)});
      std::uniform_real_distribution<double> ux(0.0, area.width), uy(0.0, area.height);
      auto draw = [&] {
        const double x = ux(rng);
        return Point{x, uy(rng)};
      };
      Point c = draw();
      Point goal = draw();
      for (int t = 0; t < horizon; ++t) {
        centers[static_cast<std::size_t>(t)].push_back(c);
        double left = hop;
        while (left > 0.0) {
          const double d = distance(c, goal);
          if (d <= left) {
            c = goal;
            left -= d;
            goal = draw();
          } else {
            c = {c.x + (goal.x - c.x) * (left / d), c.y + (goal.y - c.y) * (left / d)};
            left = 0.0;
          }
        }
      }
    }
  } else {
    const int period = mob.hotspot_period > 0 ? mob.hotspot_period : horizon;
    for (int t = 0; t < horizon; ++t) {
      const int ph = t / period;
      if (t % period) {
        centers[static_cast<std::size_t>(t)] = centers[static_cast<std::size_t>(t - 1)];
        continue;
      }
      Rng rng = make_stream(seed, {stream::kMobility, 0x686f74, static_cast<std::uint64_t>(ph)});
      std::uniform_real_distribution<double> ux(0.0, area.width), uy(0.0, area.height);
      for (int h = 0; h < mob.hotspots; ++h) {
        const double x = ux(rng);
        centers[static_cast<std::size_t>(t)].push_back({x, uy(rng)});
      }
    }
  }

  const double step_max = mob.max_speed * mob.tick_seconds;
  std::vector<Vehicle> vehicles;
  vehicles.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng = make_stream(seed, {stream::kMobility, static_cast<std::uint64_t>(i + 1)});
    std::uniform_real_distribution<double> ux(0.0, area.width), uy(0.0, area.height), unit(0.0, 1.0);
    std::uniform_real_distribution<double> speed(mob.min_speed, mob.max_speed);
    std::normal_distribution<double> jitter(0.0, mob.hotspot_spread);

    auto waypoint = [&](Tick t) -> Point {
      const auto& pts = centers[static_cast<std::size_t>(t - 1)];
      if (!pts.empty() && unit(rng) < mob.hotspot_bias) {
        std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
        const Point c = pts[pick(rng)];
        const double dx = jitter(rng);
        const double dy = jitter(rng);
        return {std::clamp(c.x + dx, 0.0, area.width), std::clamp(c.y + dy, 0.0, area.height)};
      }
      const double x = ux(rng);
      return {x, uy(rng)};
    };

    Vehicle v;
    v.vehicle_id = i + 1;
    v.trajectory.reserve(static_cast<std::size_t>(horizon));
    Point pos = waypoint(1);
    Point target = waypoint(1);
    double leg_step = std::min(speed(rng) * mob.tick_seconds, step_max);
    v.trajectory.emplace_back(pos);
    for (Tick t = 2; t <= horizon; ++t) {
      const double d = distance(pos, target);
      if (d <= leg_step) {
        pos = target;
        target = waypoint(t);
        leg_step = std::min(speed(rng) * mob.tick_seconds, step_max);
      } else {
        const double f = leg_step / d;
        pos = {pos.x + (target.x - pos.x) * f, pos.y + (target.y - pos.y) * f};
      }
      v.trajectory.emplace_back(Point{std::clamp(pos.x, 0.0, area.width), std::clamp(pos.y, 0.0, area.height)});
    }
    vehicles.push_back(std::move(v));
  }
  return vehicles;
}

std::vector<ServiceRequest> generate_requests(const std::vector<Vehicle>& vehicles, int num_services, Tick t,
                                              Rng& rng) {
  std::vector<ServiceRequest> out;
  if (num_services < 1) return out;
  std::uniform_int_distribution<int> pick(1, num_services);
  for (const auto& v : vehicles) {
    if (auto p = v.position(t)) out.push_back({v.vehicle_id, pick(rng), *p, t});
  }
  return out;
}

std::vector<ServiceRequest> generate_requests(const std::vector<Vehicle>& vehicles, int num_services, Tick t,
                                              std::uint64_t seed) {
  Rng rng = make_stream(seed, {stream::kRequests, static_cast<std::uint64_t>(t)});
  return generate_requests(vehicles, num_services, t, rng);
}

void write_trace_csv(const std::vector<Vehicle>& vehicles, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trace file '" + path.string() + "'");
  out << "vehicle_id,t,x_m,y_m\n";
  for (const auto& v : vehicles) {
    for (std::size_t i = 0; i < v.trajectory.size(); ++i) {
      if (const auto& p = v.trajectory[i]) {
        out << v.vehicle_id << ',' << (i + 1) << ',' << format_double(p->x) << ',' << format_double(p->y) << '\n';
      }
    }
  }
  if (!out) throw IoError("failed writing trace file '" + path.string() + "'");
}

std::vector<Vehicle> read_trace_csv(const std::filesystem::path& path, int horizon) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read trace file '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("vehicle_id,t,x_m,y_m", 0) != 0) {
    throw IoError(path.string() + ": missing header 'vehicle_id,t,x_m,y_m'");
  }
  std::map<VehicleId, Vehicle> by_id;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    VehicleId id = 0;
    long long t = 0;
    double x = 0, y = 0;
    const char* p = line.data();
    const char* end = p + line.size();
    auto field = [&](auto& value) {
      auto r = std::from_chars(p, end, value);
      if (r.ec != std::errc()) return false;
      p = r.ptr;
      if (p < end && *p == ',') ++p;
      return true;
    };
    if (!field(id) || !field(t) || !field(x) || !field(y) || p != end) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    }
    if (t < 1 || t > horizon) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": tick " + std::to_string(t) + " outside [1, horizon]");
    }
    auto& v = by_id[id];
    v.vehicle_id = id;
    v.trajectory.resize(static_cast<std::size_t>(horizon));
    v.trajectory[static_cast<std::size_t>(t - 1)] = Point{x, y};
  }
  std::vector<Vehicle> out;
  for (auto& [id, v] : by_id) out.push_back(std::move(v));
  return out;
}

}  // namespace iovsim
