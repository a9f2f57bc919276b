#include "iovsim/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "iovsim/mobility.hpp"
#include "json.hpp"
#include "log.hpp"

namespace iovsim {

namespace fs = std::filesystem;

std::string CellKey::label() const {
  if (!mode) return "na";
  return to_string(*mode) + "-" + std::to_string(proportion);
}

bool operator<(const CellKey& a, const CellKey& b) {
  const int ma = a.mode ? static_cast<int>(*a.mode) : -1;
  const int mb = b.mode ? static_cast<int>(*b.mode) : -1;
  return std::tie(a.proportion, ma) < std::tie(b.proportion, mb);
}

std::vector<CellKey> SweepSpec::cells() const {
  std::set<CellKey> keys;
  for (int p : proportions) {
    if (p == 0) {
      keys.insert({0, std::nullopt});
      continue;
    }
    for (AttackMode m : modes) keys.insert({p, m});
  }
  return {keys.begin(), keys.end()};
}

bool ResultsBundle::all_ok() const {
  return std::all_of(runs.begin(), runs.end(), [](const RunRecord& r) { return r.ok(); });
}

const CellSummary* ResultsBundle::find(const CellKey& key) const {
  for (const auto& c : cells) {
    if (c.cell == key) return &c;
  }
  return nullptr;
}

ScenarioConfig run_config(const ScenarioConfig& cfg, const CellKey& cell, std::uint64_t seed) {
  ScenarioConfig rc = cfg;
  rc.seed = seed;
  rc.attack.enabled = cell.proportion > 0;
  rc.attack.proportion = cell.proportion / 100.0;
  if (cell.mode) rc.attack.mode = *cell.mode;
  return rc;
}

std::vector<Vehicle> load_vehicles(const ScenarioConfig& cfg, const std::optional<fs::path>& trace_dir,
                                   std::uint64_t seed) {
  if (!trace_dir) return synthesize_vehicles(cfg.mobility.vehicles, cfg.horizon, cfg.area, cfg.mobility, seed);
  auto parsed = parse_cabspotting(*trace_dir, trace_options(cfg));
  if (parsed.malformed_lines) log::warn("{}: skipped {} malformed lines", trace_dir->string(), parsed.malformed_lines);
  return std::move(parsed.vehicles);
}

namespace {

void validate_sweep(const SweepSpec& sweep) {
  if (sweep.seeds.empty()) throw ConfigError("at least one seed is required");
  if (sweep.proportions.empty()) throw ConfigError("at least one attack proportion is required");
  for (int p : sweep.proportions) {
    if (p < 0 || p > 100) throw ConfigError("attack proportion " + std::to_string(p) + "% is outside [0, 100]");
  }
  const bool attacked = std::any_of(sweep.proportions.begin(), sweep.proportions.end(), [](int p) { return p > 0; });
  if (attacked && sweep.modes.empty()) throw ConfigError("at least one attack mode is required");
}

void fill_metrics(RunRecord& rec, const ScenarioConfig& rc, std::span<const TickLog> logs, const SybilRoster& roster) {
  rec.reopt_count = reopt_count(logs);
  rec.delay_all = avg_service_delay(logs);
  rec.delay_targeted = targeted_delay(logs, roster);
  rec.resource = resource_usage(logs, rc);
  rec.fairness = fairness(logs, rc, rc.fairness);
  rec.roster_size = roster.size();
  if (rec.cell.mode && !roster.empty()) {
    rec.targeted_attacked = targeted_delay_pooled(logs, roster, attacked_services(rc, *rec.cell.mode));
  }
  rec.rows = run_metric_rows(logs, rc, roster, rec.cell.label(), rec.seed);
}

RunRecord blank_record(const CellKey& cell, std::uint64_t seed) {
  RunRecord rec;
  rec.cell = cell;
  rec.seed = seed;
  return rec;
}

std::string seed_file_stem(const CellKey& cell, std::uint64_t seed) {
  return cell.label() + "_seed" + std::to_string(seed);
}

Stat make_stat(const std::vector<double>& v) {
  Stat s;
  if (v.empty()) return s;
  s.n = v.size();
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  return s;
}

std::map<ServiceId, Stat> stat_by_key(const std::vector<const std::map<ServiceId, double>*>& maps) {
  std::map<ServiceId, std::vector<double>> acc;
  for (const auto* m : maps) {
    for (const auto& [k, v] : *m) acc[k].push_back(v);
  }
  std::map<ServiceId, Stat> out;
  for (const auto& [k, v] : acc) out[k] = make_stat(v);
  return out;
}

}  // namespace

std::vector<CellSummary> summarize(const SweepSpec& sweep, std::span<const RunRecord> runs) {
  std::vector<CellSummary> out;
  for (const auto& key : sweep.cells()) {
    CellSummary c;
    c.cell = key;
    std::vector<double> reopt, fair, tgt, na_tgt;
    std::vector<const std::map<ServiceId, double>*> all, targeted, na_targeted;
    std::vector<std::vector<double>> resource;
    for (const auto& r : runs) {
      if (!(r.cell == key)) continue;
      if (!r.ok()) {
        c.errors.push_back("seed " + std::to_string(r.seed) + ": " + *r.error);
        continue;
      }
      ++c.runs_ok;
      reopt.push_back(r.reopt_count);
      fair.push_back(r.fairness);
      all.push_back(&r.delay_all);
      targeted.push_back(&r.delay_targeted);
      na_targeted.push_back(&r.na_delay_targeted);
      if (r.targeted_attacked) tgt.push_back(*r.targeted_attacked);
      if (r.na_targeted_attacked) na_tgt.push_back(*r.na_targeted_attacked);
      resource.push_back(r.resource);
    }
    c.reopt = make_stat(reopt);
    c.fairness = make_stat(fair);
    c.delay_all = stat_by_key(all);
    c.delay_targeted = stat_by_key(targeted);
    c.na_delay_targeted = stat_by_key(na_targeted);
    if (!tgt.empty()) c.targeted_attacked = make_stat(tgt);
    if (!na_tgt.empty()) c.na_targeted_attacked = make_stat(na_tgt);
    if (!resource.empty()) {
      for (std::size_t e = 0; e < resource.front().size(); ++e) {
        std::vector<double> col;
        for (const auto& r : resource) col.push_back(r[e]);
        c.resource.push_back(make_stat(col));
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

ResultsBundle run_experiment(const ScenarioConfig& cfg, const ExperimentOptions& options) {
  if (const auto report = validate_scenario(cfg); !report.ok()) {
    throw ConfigError("scenario is not runnable: " + report.violations.front());
  }
  validate_sweep(options.sweep);
  if (options.ticklog_dir) fs::create_directories(*options.ticklog_dir);

  ResultsBundle bundle;
  bundle.config = cfg;
  bundle.sweep = options.sweep;
  const auto cells = options.sweep.cells();
  const CellKey na{0, std::nullopt};
  const bool sweep_has_na = std::find(cells.begin(), cells.end(), na) != cells.end();

  std::optional<std::vector<Vehicle>> shared_trace;
  for (std::uint64_t seed : options.sweep.seeds) {
    std::vector<Vehicle> vehicles;
    try {
      if (options.trace_dir) {
        if (!shared_trace) shared_trace = load_vehicles(cfg, options.trace_dir, seed);
        vehicles = *shared_trace;
      } else {
        vehicles = load_vehicles(cfg, std::nullopt, seed);
      }
    } catch (const std::exception& ex) {
      for (const auto& cell : cells) {
        auto rec = blank_record(cell, seed);
        rec.error = std::string("mobility: ") + ex.what();
        bundle.runs.push_back(std::move(rec));
      }
      continue;
    }

    // The no-attack run doubles as the paired baseline for every attacked cell of this seed.
    std::optional<std::vector<TickLog>> na_logs;
    std::optional<std::string> na_error;
    {
      auto rec = blank_record(na, seed);
      try {
        const auto rc = run_config(cfg, na, seed);
        Simulation sim(rc, vehicles);
        sim.run();
        na_logs = sim.take_logs();
        fill_metrics(rec, rc, *na_logs, sim.roster());
        if (options.observer) options.observer(rc, *na_logs, sim.roster());
        if (options.ticklog_dir) write_ticklogs(*na_logs, *options.ticklog_dir / (seed_file_stem(na, seed) + ".ndjson"));
      } catch (const std::exception& ex) {
        rec.error = ex.what();
        na_error = ex.what();
        na_logs.reset();
      }
      if (sweep_has_na) bundle.runs.push_back(std::move(rec));
    }

    for (const auto& cell : cells) {
      if (!cell.mode) continue;
      auto rec = blank_record(cell, seed);
      try {
        const auto rc = run_config(cfg, cell, seed);
        Simulation sim(rc, vehicles);
        sim.run();
        const auto& logs = sim.logs();
        fill_metrics(rec, rc, logs, sim.roster());
        if (na_logs) {
          rec.na_delay_targeted = targeted_delay(*na_logs, sim.roster());
          if (!sim.roster().empty()) {
            rec.na_targeted_attacked =
                targeted_delay_pooled(*na_logs, sim.roster(), attacked_services(rc, *cell.mode));
          }
        } else {
          log::warn("{} seed {}: no baseline, no-attack run failed: {}", cell.label(), seed, na_error.value_or("?"));
        }
        if (options.observer) options.observer(rc, logs, sim.roster());
        if (options.ticklog_dir) {
          const auto stem = seed_file_stem(cell, seed);
          write_ticklogs(logs, *options.ticklog_dir / (stem + ".ndjson"));
          write_roster_csv(sim.roster(), *options.ticklog_dir / (stem + "_roster.csv"));
        }
      } catch (const std::exception& ex) {
        rec.error = ex.what();
      }
      bundle.runs.push_back(std::move(rec));
    }
  }

  std::stable_sort(bundle.runs.begin(), bundle.runs.end(), [](const RunRecord& a, const RunRecord& b) {
    if (a.cell == b.cell) return a.seed < b.seed;
    return a.cell < b.cell;
  });
  for (const auto& r : bundle.runs) {
    if (!r.ok()) log::warn("{} seed {} failed: {}", r.cell.label(), r.seed, *r.error);
  }
  bundle.cells = summarize(bundle.sweep, bundle.runs);
  return bundle;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "' for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

/// (mode label, cell) pairs for the per-mode plot series; the no-attack cell opens every series.
std::vector<std::pair<std::string, const CellSummary*>> series(const ResultsBundle& b) {
  std::vector<std::pair<std::string, const CellSummary*>> out;
  const auto* na = b.find({0, std::nullopt});
  std::vector<AttackMode> modes = b.sweep.modes;
  std::sort(modes.begin(), modes.end());
  modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
  if (modes.empty() && na) out.emplace_back("none", na);
  for (AttackMode m : modes) {
    if (na) out.emplace_back(to_string(m), na);
    for (const auto& c : b.cells) {
      if (c.cell.mode == m) out.emplace_back(to_string(m), &c);
    }
  }
  return out;
}

std::string opt_value(const std::optional<Stat>& s) { return s ? format_value(s->mean) : ""; }

nlohmann::json stat_json(const Stat& s) { return {{"mean", s.mean}, {"min", s.min}, {"max", s.max}, {"n", s.n}}; }

nlohmann::json stat_map_json(const std::map<ServiceId, Stat>& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : m) j[std::to_string(k)] = stat_json(v);
  return j;
}

std::string summary_json(const ResultsBundle& b) {
  nlohmann::json j;
  j["sweep"] = {{"proportions", b.sweep.proportions}, {"seeds", b.sweep.seeds}};
  auto modes = nlohmann::json::array();
  for (AttackMode m : b.sweep.modes) modes.push_back(to_string(m));
  j["sweep"]["modes"] = modes;
  j["horizon"] = b.config.horizon;
  j["alpha"] = b.config.alpha;
  j["all_ok"] = b.all_ok();

  auto cells = nlohmann::json::array();
  for (const auto& c : b.cells) {
    nlohmann::json cj;
    cj["cell"] = c.cell.label();
    cj["proportion"] = c.cell.proportion;
    cj["mode"] = c.cell.mode ? to_string(*c.cell.mode) : "none";
    cj["runs_ok"] = c.runs_ok;
    cj["errors"] = c.errors;
    if (c.runs_ok) {
      cj["reopt_count"] = stat_json(c.reopt);
      cj["jains_index"] = stat_json(c.fairness);
      cj["avg_service_delay_ms"] = stat_map_json(c.delay_all);
      cj["targeted_delay_ms"] = stat_map_json(c.delay_targeted);
      cj["na_targeted_delay_ms"] = stat_map_json(c.na_delay_targeted);
      if (c.targeted_attacked) cj["targeted_attacked_ms"] = stat_json(*c.targeted_attacked);
      if (c.na_targeted_attacked) cj["na_targeted_attacked_ms"] = stat_json(*c.na_targeted_attacked);
      auto res = nlohmann::json::array();
      for (const auto& s : c.resource) res.push_back(stat_json(s));
      cj["resource_usage"] = res;
    }
    cells.push_back(cj);
  }
  j["cells"] = cells;

  auto runs = nlohmann::json::array();
  for (const auto& r : b.runs) {
    nlohmann::json rj{{"cell", r.cell.label()}, {"seed", r.seed}, {"ok", r.ok()}};
    if (r.error) {
      rj["error"] = *r.error;
    } else {
      rj["roster_size"] = r.roster_size;
      auto rows = nlohmann::json::array();
      for (const auto& row : r.rows) rows.push_back({{"metric", row.metric}, {"key", row.key}, {"value", row.value}});
      rj["metrics"] = rows;
    }
    runs.push_back(rj);
  }
  j["runs"] = runs;
  return j.dump(2) + "\n";
}

}  // namespace

std::vector<ManifestEntry> export_results(const ResultsBundle& results, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());

  std::vector<std::pair<std::string, std::string>> files;
  if (!results.runs.empty()) {
    const auto rows = series(results);
    std::ostringstream reopt, delay_all, delay_tgt, resource, fair;
    reopt << "mode,proportion,mean,min,max,seeds\n";
    delay_all << "mode,proportion,service_id,mean_ms,min_ms,max_ms\n";
    delay_tgt << "mode,proportion,service_id,targeted_ms,na_baseline_ms\n";
    resource << "mode,proportion,edge_id,mean_usage,min_usage,max_usage\n";
    fair << "mode,proportion,mean,min,max\n";
    for (const auto& [mode, c] : rows) {
      if (!c->runs_ok) continue;
      const std::string prefix = mode + "," + std::to_string(c->cell.proportion) + ",";
      reopt << prefix << format_value(c->reopt.mean) << ',' << format_value(c->reopt.min) << ','
            << format_value(c->reopt.max) << ',' << c->reopt.n << '\n';
      for (const auto& [s, st] : c->delay_all) {
        delay_all << prefix << s << ',' << format_value(st.mean) << ',' << format_value(st.min) << ','
                  << format_value(st.max) << '\n';
      }
      if (c->cell.mode) {
        for (const auto& [s, st] : c->delay_targeted) {
          const auto na = c->na_delay_targeted.find(s);
          delay_tgt << prefix << s << ',' << format_value(st.mean) << ','
                    << (na != c->na_delay_targeted.end() ? format_value(na->second.mean) : "") << '\n';
        }
        if (c->targeted_attacked) {
          delay_tgt << prefix << "attacked," << opt_value(c->targeted_attacked) << ','
                    << opt_value(c->na_targeted_attacked) << '\n';
        }
      }
      for (std::size_t e = 0; e < c->resource.size(); ++e) {
        const auto& st = c->resource[e];
        resource << prefix << (e + 1) << ',' << format_value(st.mean) << ',' << format_value(st.min) << ','
                 << format_value(st.max) << '\n';
      }
      fair << prefix << format_value(c->fairness.mean) << ',' << format_value(c->fairness.min) << ','
           << format_value(c->fairness.max) << '\n';
    }
    std::vector<MetricRow> metric_rows;
    for (const auto& r : results.runs) metric_rows.insert(metric_rows.end(), r.rows.begin(), r.rows.end());

    files.emplace_back("reopt.csv", reopt.str());
    files.emplace_back("delay_all.csv", delay_all.str());
    files.emplace_back("delay_targeted.csv", delay_tgt.str());
    files.emplace_back("resource.csv", resource.str());
    files.emplace_back("fairness.csv", fair.str());
    files.emplace_back("metrics.csv", metrics_csv(metric_rows));
  }
  files.emplace_back("summary.json", summary_json(results));

  std::vector<ManifestEntry> manifest;
  for (const auto& [name, content] : files) {
    const auto path = out_dir / name;
    write_file(path, content);
    manifest.push_back({name, sha256_file(path), fs::file_size(path)});
  }
  nlohmann::json mj = nlohmann::json::array();
  for (const auto& m : manifest) mj.push_back({{"file", m.file}, {"sha256", m.sha256}, {"bytes", m.bytes}});
  write_file(out_dir / "manifest.json", nlohmann::json{{"files", mj}}.dump(2) + "\n");
  return manifest;
}

}  // namespace iovsim
