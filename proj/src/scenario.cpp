#include "iovsim/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace iovsim {

using nlohmann::json;

namespace {

const std::vector<double> kDefaultResources{5, 10, 15, 20, 25, 30, 35, 40};
const std::vector<double> kDefaultThresholds{14, 16, 18, 20, 22, 24, 26, 28};
const std::vector<double> kDefaultCapacities{60, 70, 80, 90, 100, 100};

// Walks a JSON object, tracking the dotted path for error messages and rejecting unknown keys.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const {
    seen_.insert(key);
    return node_.contains(key) && !node_.at(key).is_null();
  }

  template <typename T>
  T required(const std::string& key) const {
    if (!has(key)) fail(name(key), "missing required field");
    return as<T>(key);
  }

  template <typename T>
  T optional(const std::string& key, T fallback) const {
    return has(key) ? as<T>(key) : fallback;
  }

  Reader child(const std::string& key) const { return Reader(node_.at(key), name(key)); }
  const json& raw(const std::string& key) const { return node_.at(key); }
  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void reject_unknown() const {
    for (const auto& [k, v] : node_.items()) {
      if (!seen_.count(k)) fail(name(k), "unknown field");
    }
  }

  [[noreturn]] static void fail(const std::string& field, const std::string& what) {
    throw ConfigError("config field '" + field + "': " + what);
  }

 private:
  template <typename T>
  T as(const std::string& key) const {
    try {
      return node_.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(name(key), std::string("wrong type (") + e.what() + ")");
    }
  }

  const json& node_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

DelayNormalization normalization_from(const std::string& s, const std::string& field) {
  if (s == "threshold") return DelayNormalization::Threshold;
  if (s == "raw") return DelayNormalization::Raw;
  Reader::fail(field, "expected 'threshold' or 'raw', got '" + s + "'");
}

FairnessMode fairness_from(const std::string& s, const std::string& field) {
  if (s == "time_mean_utilization") return FairnessMode::TimeMeanUtilization;
  if (s == "mean_per_tick") return FairnessMode::MeanPerTick;
  Reader::fail(field, "expected 'time_mean_utilization' or 'mean_per_tick', got '" + s + "'");
}

std::string to_string(DelayNormalization n) { return n == DelayNormalization::Raw ? "raw" : "threshold"; }

std::string to_string(FairnessMode f) {
  return f == FairnessMode::MeanPerTick ? "mean_per_tick" : "time_mean_utilization";
}

LatLon read_latlon(const Reader& r) {
  LatLon p{r.required<double>("lat"), r.required<double>("lon")};
  r.reject_unknown();
  return p;
}

json latlon_json(LatLon p) { return json{{"lat", p.lat}, {"lon", p.lon}}; }

void read_training(const Reader& r, TrainingConfig& t) {
  t.batch_size = r.optional("batch_size", t.batch_size);
  t.replay_capacity = r.optional("replay_capacity", t.replay_capacity);
  t.train_period_mean = r.optional("train_period_mean", t.train_period_mean);
  t.steps_per_train = r.optional("steps_per_train", t.steps_per_train);
  t.hidden_layers = r.optional("hidden_layers", t.hidden_layers);
  t.learning_rate = r.optional("learning_rate", t.learning_rate);
  t.quality_scale = r.optional("quality_scale", t.quality_scale);
  t.reopt_threshold = r.optional("reopt_threshold", t.reopt_threshold);
  t.bootstrap_gamma = r.optional("bootstrap_gamma", t.bootstrap_gamma);
  r.reject_unknown();
}

void read_attack(const Reader& r, AttackConfig& a) {
  a.enabled = r.optional("enabled", a.enabled);
  a.proportion = r.optional("proportion", a.proportion);
  if (r.has("mode")) {
    try {
      a.mode = attack_mode_from_string(r.required<std::string>("mode"));
    } catch (const ConfigError& e) {
      Reader::fail(r.name("mode"), e.what());
    }
  }
  a.selective_services = r.optional("selective_services", a.selective_services);
  a.fake_delays = r.optional("fake_delays", a.fake_delays);
  r.reject_unknown();
}

void read_mobility(const Reader& r, MobilityConfig& m) {
  m.vehicles = r.optional("vehicles", m.vehicles);
  m.max_speed = r.optional("max_speed", m.max_speed);
  m.min_speed = r.optional("min_speed", m.min_speed);
  m.tick_seconds = r.optional("tick_seconds", m.tick_seconds);
  m.hotspots = r.optional("hotspots", m.hotspots);
  m.hotspot_bias = r.optional("hotspot_bias", m.hotspot_bias);
  m.hotspot_spread = r.optional("hotspot_spread", m.hotspot_spread);
  m.hotspot_period = r.optional("hotspot_period", m.hotspot_period);
  m.hotspot_speed = r.optional("hotspot_speed", m.hotspot_speed);
  if (r.has("trace_bbox")) {
    Reader b = r.child("trace_bbox");
    for (const char* corner : {"south_west", "north_east"}) {
      if (!b.has(corner)) Reader::fail(b.name(corner), "missing required field");
    }
    m.trace_bbox.south_west = read_latlon(b.child("south_west"));
    m.trace_bbox.north_east = read_latlon(b.child("north_east"));
    b.reject_unknown();
  }
  if (r.has("projection_origin")) m.projection_origin = read_latlon(r.child("projection_origin"));
  if (r.has("trace_window_start")) m.trace_window_start = r.required<std::int64_t>("trace_window_start");
  if (r.has("trace_window_end")) m.trace_window_end = r.required<std::int64_t>("trace_window_end");
  r.reject_unknown();
}

}  // namespace

std::string to_string(AttackMode m) { return m == AttackMode::Selective ? "selective" : "any"; }

AttackMode attack_mode_from_string(const std::string& s) {
  if (s == "any") return AttackMode::Any;
  if (s == "selective") return AttackMode::Selective;
  throw ConfigError("attack mode must be 'any' or 'selective', got '" + s + "'");
}

std::vector<EdgeNode> grid_edges(Area area, int rows, int cols, const std::vector<double>& capacities) {
  if (rows < 1 || cols < 1) throw ConfigError("edge grid needs rows >= 1 and cols >= 1");
  if (capacities.size() != static_cast<std::size_t>(rows * cols)) {
    throw ConfigError("edge grid: expected " + std::to_string(rows * cols) + " capacities, got " +
                      std::to_string(capacities.size()));
  }
  std::vector<EdgeNode> edges;
  const double cw = area.width / cols;
  const double ch = area.height / rows;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int idx = r * cols + c;
      edges.push_back({idx + 1, {cw * (c + 0.5), ch * (r + 0.5)}, capacities[static_cast<std::size_t>(idx)]});
    }
  }
  return edges;
}

ScenarioConfig default_scenario() {
  ScenarioConfig cfg;
  for (std::size_t i = 0; i < kDefaultResources.size(); ++i) {
    cfg.services.push_back({static_cast<ServiceId>(i + 1), kDefaultResources[i], kDefaultThresholds[i]});
  }
  cfg.edges = grid_edges(cfg.area, 2, 3, kDefaultCapacities);
  return cfg;
}

ScenarioConfig parse_config(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    // The library message carries "line L, column C".
    throw ConfigError(origin + ": parse error: " + e.what());
  }

  ScenarioConfig cfg;
  cfg.services.clear();
  cfg.edges.clear();
  const Reader r(root, "");

  cfg.seed = r.optional<std::uint64_t>("seed", cfg.seed);
  cfg.horizon = r.required<int>("horizon");
  if (r.has("area")) {
    Reader a = r.child("area");
    cfg.area.width = a.required<double>("width");
    cfg.area.height = a.required<double>("height");
    a.reject_unknown();
  }
  cfg.alpha = r.optional("alpha", cfg.alpha);
  if (r.has("delay_normalization")) {
    cfg.delay_normalization =
        normalization_from(r.required<std::string>("delay_normalization"), "delay_normalization");
  }
  if (r.has("fairness")) cfg.fairness = fairness_from(r.required<std::string>("fairness"), "fairness");

  if (!r.has("services")) Reader::fail("services", "missing required field");
  const json& services = r.raw("services");
  if (!services.is_array()) Reader::fail("services", "expected an array");
  for (std::size_t i = 0; i < services.size(); ++i) {
    Reader s(services[i], "services[" + std::to_string(i) + "]");
    cfg.services.push_back({s.required<int>("id"), s.required<double>("resource"),
                            s.required<double>("delay_threshold")});
    s.reject_unknown();
  }

  const bool listed = r.has("edges");
  const bool grid = r.has("edge_grid");
  if (listed == grid) Reader::fail("edges", "exactly one of 'edges' or 'edge_grid' is required");
  if (listed) {
    const json& edges = r.raw("edges");
    if (!edges.is_array()) Reader::fail("edges", "expected an array");
    for (std::size_t i = 0; i < edges.size(); ++i) {
      Reader e(edges[i], "edges[" + std::to_string(i) + "]");
      cfg.edges.push_back({e.required<int>("id"), {e.required<double>("x"), e.required<double>("y")},
                           e.required<double>("capacity")});
      e.reject_unknown();
    }
  } else {
    Reader g = r.child("edge_grid");
    try {
      cfg.edges = grid_edges(cfg.area, g.required<int>("rows"), g.required<int>("cols"),
                             g.required<std::vector<double>>("capacities"));
    } catch (const ConfigError& e) {
      Reader::fail("edge_grid", e.what());
    }
    g.reject_unknown();
  }

  if (r.has("delay_model")) {
    Reader d = r.child("delay_model");
    cfg.delay_model.proc_delay = d.optional("proc_delay", cfg.delay_model.proc_delay);
    cfg.delay_model.per_meter_delay = d.optional("per_meter_delay", cfg.delay_model.per_meter_delay);
    cfg.delay_model.cloud_fallback_delay =
        d.optional("cloud_fallback_delay", cfg.delay_model.cloud_fallback_delay);
    d.reject_unknown();
  }
  if (r.has("training")) read_training(r.child("training"), cfg.training);
  {
    // The default selective set names services 1-4; scenarios with fewer services keep the ones
    // that exist. An explicit list is taken as written and validated.
    auto& sel = cfg.attack.selective_services;
    std::erase_if(sel, [&](ServiceId s) { return s > cfg.num_services(); });
  }
  if (r.has("attack")) read_attack(r.child("attack"), cfg.attack);
  if (r.has("mobility")) read_mobility(r.child("mobility"), cfg.mobility);
  r.reject_unknown();

  const auto report = validate_scenario(cfg);
  if (!report.ok()) {
    std::string msg = origin + ": invalid scenario:";
    for (const auto& v : report.violations) msg += "\n  - " + v;
    throw ConfigError(msg);
  }
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string serialize_config(const ScenarioConfig& cfg) {
  json root;
  root["seed"] = cfg.seed;
  root["horizon"] = cfg.horizon;
  root["area"] = {{"width", cfg.area.width}, {"height", cfg.area.height}};
  root["alpha"] = cfg.alpha;
  root["delay_normalization"] = to_string(cfg.delay_normalization);
  root["fairness"] = to_string(cfg.fairness);
  json services = json::array();
  for (const auto& s : cfg.services) {
    services.push_back({{"id", s.service_id}, {"resource", s.resource_req}, {"delay_threshold", s.delay_threshold}});
  }
  root["services"] = services;
  json edges = json::array();
  for (const auto& e : cfg.edges) {
    edges.push_back({{"id", e.edge_id}, {"x", e.position.x}, {"y", e.position.y}, {"capacity", e.capacity}});
  }
  root["edges"] = edges;
  root["delay_model"] = {{"proc_delay", cfg.delay_model.proc_delay},
                         {"per_meter_delay", cfg.delay_model.per_meter_delay},
                         {"cloud_fallback_delay", cfg.delay_model.cloud_fallback_delay}};
  const auto& t = cfg.training;
  root["training"] = {{"batch_size", t.batch_size},           {"replay_capacity", t.replay_capacity},
                      {"train_period_mean", t.train_period_mean}, {"steps_per_train", t.steps_per_train},
                      {"hidden_layers", t.hidden_layers},     {"learning_rate", t.learning_rate},
                      {"quality_scale", t.quality_scale},     {"reopt_threshold", t.reopt_threshold},
                      {"bootstrap_gamma", t.bootstrap_gamma}};
  const auto& a = cfg.attack;
  root["attack"] = {{"enabled", a.enabled},
                    {"proportion", a.proportion},
                    {"mode", to_string(a.mode)},
                    {"selective_services", a.selective_services},
                    {"fake_delays", a.fake_delays}};
  const auto& m = cfg.mobility;
  json mob = {{"vehicles", m.vehicles},
              {"max_speed", m.max_speed},
              {"min_speed", m.min_speed},
              {"tick_seconds", m.tick_seconds},
              {"hotspots", m.hotspots},
              {"hotspot_bias", m.hotspot_bias},
              {"hotspot_spread", m.hotspot_spread},
              {"hotspot_period", m.hotspot_period},
              {"hotspot_speed", m.hotspot_speed},
              {"trace_bbox",
               {{"south_west", latlon_json(m.trace_bbox.south_west)},
                {"north_east", latlon_json(m.trace_bbox.north_east)}}},
              {"projection_origin", latlon_json(m.projection_origin)}};
  if (m.trace_window_start) mob["trace_window_start"] = *m.trace_window_start;
  if (m.trace_window_end) mob["trace_window_end"] = *m.trace_window_end;
  root["mobility"] = mob;
  return root.dump(2) + "\n";
}

ValidationReport validate_scenario(const ScenarioConfig& cfg) {
  ValidationReport rep;
  auto bad = [&](std::string msg) { rep.violations.push_back(std::move(msg)); };

  if (cfg.services.empty()) bad("at least one service is required");
  if (cfg.edges.empty()) bad("at least one edge is required");
  if (cfg.edges.size() > 64) bad("at most 64 edges are supported");
  if (cfg.horizon < 1) bad("horizon must be >= 1");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) bad("alpha out of [0,1]");
  if (!(cfg.area.width > 0.0 && cfg.area.height > 0.0)) bad("area dimensions must be > 0");

  for (std::size_t i = 0; i < cfg.services.size(); ++i) {
    const auto& s = cfg.services[i];
    const std::string tag = "service " + std::to_string(s.service_id);
    if (s.service_id != static_cast<int>(i + 1)) bad("service ids must be unique and contiguous from 1 (position " + std::to_string(i + 1) + " has id " + std::to_string(s.service_id) + ")");
    if (!(s.resource_req > 0.0)) bad(tag + ": resource_req must be > 0");
    if (!(s.delay_threshold > 0.0)) bad(tag + ": delay_threshold must be > 0");
  }
  for (std::size_t i = 0; i < cfg.edges.size(); ++i) {
    const auto& e = cfg.edges[i];
    const std::string tag = "edge " + std::to_string(e.edge_id);
    if (e.edge_id != static_cast<int>(i + 1)) bad("edge ids must be unique and contiguous from 1 (position " + std::to_string(i + 1) + " has id " + std::to_string(e.edge_id) + ")");
    if (!(e.capacity > 0.0)) bad(tag + ": capacity must be > 0");
    if (!cfg.area.contains(e.position)) bad(tag + ": position outside the area");
  }

  const auto& d = cfg.delay_model;
  if (!(d.proc_delay >= 0.0 && d.per_meter_delay >= 0.0 && d.cloud_fallback_delay >= 0.0)) {
    bad("delay model parameters must be >= 0");
  } else if (!(d.proc_delay > 0.0 && d.cloud_fallback_delay > 0.0)) {
    bad("proc_delay and cloud_fallback_delay must be > 0 so every delay is strictly positive");
  }

  const auto& t = cfg.training;
  if (t.batch_size < 1) bad("training.batch_size must be >= 1");
  if (t.replay_capacity < t.batch_size) bad("training.replay_capacity must be >= batch_size");
  if (t.train_period_mean < 1) bad("training.train_period_mean must be >= 1");
  if (t.steps_per_train < 1) bad("training.steps_per_train must be >= 1");
  if (!(t.learning_rate > 0.0)) bad("training.learning_rate must be > 0");
  if (!(t.quality_scale > 0.0)) bad("training.quality_scale must be > 0");
  if (!(t.reopt_threshold >= 0.0 && t.reopt_threshold <= 1.0)) bad("training.reopt_threshold out of [0,1]");
  if (!(t.bootstrap_gamma >= 0.0 && t.bootstrap_gamma < 1.0)) bad("training.bootstrap_gamma out of [0,1)");
  for (int w : t.hidden_layers) {
    if (w < 1) bad("training.hidden_layers widths must be >= 1");
  }

  const auto& a = cfg.attack;
  if (!(a.proportion >= 0.0 && a.proportion <= 1.0)) bad("attack.proportion out of [0,1]");
  if (a.enabled && a.fake_delays.empty()) bad("attack.fake_delays must be non-empty when the attack is enabled");
  for (double f : a.fake_delays) {
    if (!(f > 0.0)) bad("attack.fake_delays entries must be > 0");
  }
  for (ServiceId s : a.selective_services) {
    if (s < 1 || s > cfg.num_services()) bad("attack.selective_services entry " + std::to_string(s) + " not in 1..S");
  }

  const auto& m = cfg.mobility;
  if (m.vehicles < 1) bad("mobility.vehicles must be >= 1");
  if (!(m.min_speed >= 0.0 && m.max_speed >= m.min_speed)) bad("mobility speeds must satisfy 0 <= min_speed <= max_speed");
  if (!(m.tick_seconds > 0.0)) bad("mobility.tick_seconds must be > 0");
  if (m.hotspots < 0) bad("mobility.hotspots must be >= 0");
  if (!(m.hotspot_bias >= 0.0 && m.hotspot_bias <= 1.0)) bad("mobility.hotspot_bias out of [0,1]");
  if (!(m.hotspot_spread > 0.0)) bad("mobility.hotspot_spread must be > 0");
  if (m.hotspot_period < 0) bad("mobility.hotspot_period must be >= 0");
  if (!(m.hotspot_speed >= 0.0)) bad("mobility.hotspot_speed must be >= 0");

  double total_req = 0.0;
  double total_cap = 0.0;
  for (const auto& s : cfg.services) total_req += s.resource_req;
  for (const auto& e : cfg.edges) total_cap += e.capacity;
  if (!cfg.services.empty() && !cfg.edges.empty() && total_req > total_cap) {
    rep.warnings.push_back("sum of resource_req (" + std::to_string(total_req) + ") exceeds sum of capacity (" +
                           std::to_string(total_cap) + "): no feasible single-copy placement");
  }
  return rep;
}

}  // namespace iovsim
