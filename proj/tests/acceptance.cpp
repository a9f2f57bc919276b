// Acceptance gate: runs the default sweep once and checks every release criterion against it,
// plus the numerical oracles and a repeated CLI invocation. Prints one PASS/FAIL line per
// criterion and exits non-zero if any fails.
//
//   acceptance <path-to-simulate>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "iovsim/actor.hpp"
#include "iovsim/critic.hpp"
#include "iovsim/experiment.hpp"
#include "support.hpp"

using namespace iovsim;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (notes.size() < 8) notes.push_back(what);
    }
  }
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

// ---- run-level checks, fed by the experiment observer ------------------------------------

struct RunChecks {
  Verdict feasibility;  // part of criterion 4
  Verdict channel;      // criterion 7
  std::size_t runs_seen = 0;
  std::size_t poisoned_entries = 0;
  std::size_t ticks_compared = 0;

  std::map<std::uint64_t, std::vector<Vehicle>> fleets;
  std::uint64_t na_seed = 0;
  std::vector<TickLog> na_logs;

  const std::vector<Vehicle>& fleet(const ScenarioConfig& cfg) {
    auto it = fleets.find(cfg.seed);
    if (it == fleets.end()) it = fleets.emplace(cfg.seed, load_vehicles(cfg, std::nullopt, cfg.seed)).first;
    return it->second;
  }

  void operator()(const ScenarioConfig& cfg, std::span<const TickLog> logs, const SybilRoster& roster) {
    ++runs_seen;
    const bool attacked = cfg.attack.enabled && cfg.attack.proportion > 0.0;
    const auto& fake = cfg.attack.fake_delays;
    const auto& cars = fleet(cfg);

    for (const auto& log : logs) {
      feasibility.require(capacity_feasible(log.action, cfg.services, cfg.edges),
                          "capacity violated at t=" + std::to_string(log.time));

      for (const auto& f : log.feedback) {
        for (std::size_t i = 0; i < f.reported_delays.size(); ++i) {
          const auto& rep = f.reported_delays[i];
          const auto& tru = f.true_delays[i];
          const bool poisoned =
              attacked && roster.contains(rep.vehicle_id) && service_targeted(cfg.attack, f.service_id);
          if (poisoned) {
            ++poisoned_entries;
            channel.require(std::find(fake.begin(), fake.end(), rep.delay) != fake.end(),
                            fmt("poisoned value %.17g outside the fake set", rep.delay));
          } else {
            channel.require(rep == tru, "unpoisoned entry differs from ground truth");
          }
        }
      }

      // Ground truth is exactly what the delay model gives for this tick's traffic under the
      // placement in force, whatever the attacker reported.
      const auto requests = generate_requests(cars, cfg.num_services(), log.time, cfg.seed);
      const auto expected = aggregate_feedback(observe_delays(requests, log.action, cfg), log.time);
      bool same = expected.size() == log.feedback.size();
      for (std::size_t k = 0; same && k < expected.size(); ++k) {
        same = expected[k].true_delays == log.feedback[k].true_delays;
      }
      channel.require(same, "true delays differ from the delay model at t=" + std::to_string(log.time));
    }

    if (!attacked) {
      na_seed = cfg.seed;
      na_logs.assign(logs.begin(), logs.end());
      return;
    }
    channel.require(na_seed == cfg.seed, "no matched no-attack run");
    // Bit-identical to the matched no-attack run for as long as both serve the same placement.
    for (std::size_t i = 0; i < logs.size() && i < na_logs.size(); ++i) {
      if (!(logs[i].action == na_logs[i].action)) break;
      ++ticks_compared;
      bool same = logs[i].feedback.size() == na_logs[i].feedback.size();
      for (std::size_t k = 0; same && k < logs[i].feedback.size(); ++k) {
        same = logs[i].feedback[k].true_delays == na_logs[i].feedback[k].true_delays;
      }
      channel.require(same, "true delays differ from the matched no-attack run at t=" + std::to_string(i + 1));
    }
  }
};

void check_proportion_zero(Verdict& v) {
  auto cfg = default_scenario();
  cfg.attack.enabled = true;
  cfg.attack.proportion = 0.0;
  const auto cars = load_vehicles(cfg, std::nullopt, cfg.seed);
  for (AttackMode m : {AttackMode::Any, AttackMode::Selective}) {
    cfg.attack.mode = m;
    for (const auto& log : run_simulation(cfg, cars)) {
      for (const auto& f : log.feedback) {
        v.require(f.reported_delays == f.true_delays && f.avg_reported == f.avg_true,
                  "proportion 0: reported differs from true");
      }
    }
  }
}

// ---- sweep trends ------------------------------------------------------------------------

const CellSummary& cell(const ResultsBundle& b, int p, std::optional<AttackMode> m) {
  const auto* c = b.find({p, p == 0 ? std::nullopt : m});
  if (!c) throw std::runtime_error("missing cell");
  return *c;
}

Verdict reopt_trend(const ResultsBundle& b, double seconds) {
  Verdict v;
  const double na = cell(b, 0, std::nullopt).reopt.mean;
  v.require(na >= 20.0, fmt("no-attack re-optimization count %.2f is below 20", na));
  for (AttackMode m : {AttackMode::Any, AttackMode::Selective}) {
    int inversions = 0;
    double prev = na;
    for (int p : {10, 20, 30, 40, 50}) {
      const double cur = cell(b, p, m).reopt.mean;
      if (cur > prev) {
        ++inversions;
        v.require(cur - prev <= 0.05 * na, to_string(m) + fmt(": inversion of %.2f at %g%%", cur - prev, p));
      }
      prev = cur;
    }
    v.require(inversions <= 1, to_string(m) + ": more than one inversion");
    const double last = cell(b, 50, m).reopt.mean;
    v.require(last <= 0.15 * na, to_string(m) + fmt(": count at 50%% is %.2f, limit %.2f", last, 0.15 * na));
  }
  v.require(seconds <= 600.0, fmt("sweep took %.0f s", seconds));
  return v;
}

Verdict delay_inflation(const ResultsBundle& b) {
  Verdict v;
  for (auto [m, floor] : {std::pair{AttackMode::Selective, 1.30}, std::pair{AttackMode::Any, 1.10}}) {
    const auto& c = cell(b, 50, m);
    if (!c.targeted_attacked || !c.na_targeted_attacked) {
      v.require(false, to_string(m) + ": no targeted delay recorded");
      continue;
    }
    const double ratio = c.targeted_attacked->mean / c.na_targeted_attacked->mean;
    v.require(ratio >= floor, to_string(m) + fmt(": %.3f ms vs %.3f ms without attack (x%.3f)",
                                                 c.targeted_attacked->mean, c.na_targeted_attacked->mean, ratio));
  }
  return v;
}

Verdict fairness_drop(const ResultsBundle& b) {
  Verdict v;
  const double na = cell(b, 0, std::nullopt).fairness.mean;
  for (AttackMode m : {AttackMode::Any, AttackMode::Selective}) {
    for (int p : {10, 20, 30, 40, 50}) {
      const double j = cell(b, p, m).fairness.mean;
      v.require(na > j, to_string(m) + fmt(": J(%g%%) = %.4f not below J(0) = %.4f", p, j, na));
    }
  }
  return v;
}

// ---- oracles -----------------------------------------------------------------------------

void oracle_equivalence(Verdict& v) {
  int compared = 0;
  for (std::uint64_t seed = 1; compared < 100 && seed < 1000; ++seed) {
    const int S = 1 + static_cast<int>(seed % 3);
    const int E = 1 + static_cast<int>((seed / 3) % 3);
    const auto inst = iovsim::testing::random_instance(seed * 7919, S, E);
    PlacementAction oracle;
    try {
      oracle = exhaustive_oracle(inst.snapshot, inst.cfg);
    } catch (const InfeasibleError&) {
      continue;
    }
    const auto found = optimize_placement(inst.snapshot, inst.cfg, std::nullopt);
    const double a = objective(found, inst.snapshot, inst.cfg);
    const double b = objective(oracle, inst.snapshot, inst.cfg);
    v.require(a == b, fmt("instance %g: local search %.17g vs oracle %.17g", static_cast<double>(seed), a, b));
    ++compared;
  }
  v.require(compared >= 100, "fewer than 100 feasible oracle instances");
}

double& coordinate(CriticParameters& p, std::size_t k) {
  for (auto& l : p.layers) {
    if (k < l.weight.size()) return l.weight[k];
    k -= l.weight.size();
    if (k < l.bias.size()) return l.bias[k];
    k -= l.bias.size();
  }
  throw std::out_of_range("coordinate");
}

Verdict critic_numerics() {
  Verdict v;
  Rng rng(31337);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  double worst = 0.0;
  for (int draw = 0; draw < 50; ++draw) {
    auto p = make_critic(12, {8, 6}, static_cast<std::uint64_t>(draw + 1));
    for (auto& l : p.layers) {
      for (double& w : l.weight) w = u(rng);
      for (double& b : l.bias) b = u(rng);
    }
    std::vector<Experience> batch(4);
    for (auto& e : batch) {
      e.state = {2, 3, iovsim::testing::random_vector(rng, 6, 0.0, 0.3)};
      e.action.resize(6);
      for (double& a : e.action) a = static_cast<double>(rng() % 2);
      e.reward = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    }
    std::vector<const Experience*> ptrs;
    for (const auto& e : batch) ptrs.push_back(&e);
    auto grad = loss_gradient(p, ptrs).grad;
    for (std::size_t k = 0; k < p.parameter_count(); ++k) {
      double& theta = coordinate(p, k);
      const double saved = theta;
      theta = saved + 1e-5;
      const double up = loss(p, ptrs);
      theta = saved - 1e-5;
      const double down = loss(p, ptrs);
      theta = saved;
      const double numeric = (up - down) / 2e-5;
      const double analytic = coordinate(grad, k);
      worst = std::max(worst, std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
    }
  }
  v.require(worst <= 1e-4, fmt("worst gradient relative error %.3g", worst));

  auto one_input = [](double bias, double w_out) {
    CriticParameters p = make_critic(2, {1}, 1);
    p.layers[0].weight = {1.0, 0.0};
    p.layers[0].bias = {0.0};
    p.layers[1].weight = {w_out};
    p.layers[1].bias = {bias};
    return p;
  };
  auto exp_at = [](double x, double y) {
    Experience e;
    e.state = {1, 1, {x}};
    e.action = {0.0};
    e.reward = y;
    return e;
  };
  const auto base = one_input(std::log(0.3 / 0.7), 0.0);
  const std::vector<Experience> a{exp_at(0.0, 0.5)};
  v.require(std::abs(loss(base, a) - 0.04) <= 1e-12, fmt("loss %.17g, expected 0.04", loss(base, a)));
  const std::vector<Experience> b{exp_at(0.0, quality(base, a[0].state, a[0].action))};
  v.require(std::abs(loss(base, b)) <= 1e-12, "loss at the fitted target is not 0");
  const auto sat = one_input(0.0, 200.0);
  const std::vector<Experience> c{exp_at(1.0, 0.0), exp_at(-1.0, 1.0)};
  v.require(std::abs(loss(sat, c) - 1.0) <= 1e-12, fmt("loss %.17g, expected 1", loss(sat, c)));
  return v;
}

Verdict jain_checks() {
  Verdict v;
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
  v.require(near(jains_index(std::vector<double>{0.5, 0.5, 0.5}), 1.0), "equal shares");
  v.require(near(jains_index(std::vector<double>{1, 0, 0, 0, 0, 0}), 1.0 / 6.0), "single user");
  v.require(near(jains_index(std::vector<double>{2, 1, 2, 1}), 0.9), "0.9 case");
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + rng() % 12;
    auto x = iovsim::testing::random_vector(rng, n, 0.0, 3.0);
    const double j = jains_index(x);
    v.require(j >= 1.0 / static_cast<double>(n) - 1e-12 && j <= 1.0 + 1e-12, "bounds");
    for (double& e : x) e *= 37.5;
    v.require(std::abs(jains_index(x) - j) <= 1e-12, "scale invariance");
  }
  return v;
}

// ---- CLI determinism ---------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Verdict cli_determinism(const std::string& simulate) {
  Verdict v;
  const auto root = fs::temp_directory_path() / ("iovsim-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::string config = IOVSIM_SOURCE_DIR "/configs/defaults.json";
  // Identical arguments both times; the first run's files are moved aside before the second.
  const std::string cmd = "\"" + simulate + "\" --config \"" + config + "\" --horizon 200 --seeds 1,2 --out \"" +
                          (root / "out").string() + "\" --ticklogs \"" + (root / "logs").string() + "\"";
  for (const char* run : {"a", "b"}) {
    fs::create_directories(root / run);
    const int rc = std::system((cmd + " > \"" + (root / run / "stdout").string() + "\"").c_str());
    v.require(rc == 0, "simulate exited with status " + std::to_string(rc));
    if (rc != 0) break;
    fs::rename(root / "out", root / run / "out");
    fs::rename(root / "logs", root / run / "logs");
  }
  if (v.pass) {
    const auto ma = slurp(root / "a" / "out" / "manifest.json");
    v.require(!ma.empty(), "no manifest written");
    v.require(ma == slurp(root / "b" / "out" / "manifest.json"), "manifests differ");
    v.require(slurp(root / "a" / "stdout") == slurp(root / "b" / "stdout"), "console output differs");
    for (const auto& e : fs::directory_iterator(root / "a" / "out")) {
      const auto other = root / "b" / "out" / e.path().filename();
      v.require(fs::exists(other) && slurp(e.path()) == slurp(other), e.path().filename().string() + " differs");
    }
    std::size_t logs = 0;
    for (const auto& e : fs::directory_iterator(root / "a" / "logs")) {
      ++logs;
      const auto other = root / "b" / "logs" / e.path().filename();
      v.require(fs::exists(other) && slurp(e.path()) == slurp(other), e.path().filename().string() + " differs");
    }
    v.require(logs == 22 + 20, "unexpected number of tick log files: " + std::to_string(logs));
  }
  fs::remove_all(root);
  return v;
}

void report(int id, const char* title, const Verdict& v, int& failures) {
  std::printf("criterion %d %-36s %s\n", id, title, v.pass ? "PASS" : "FAIL");
  for (const auto& n : v.notes) std::printf("    %s\n", n.c_str());
  if (!v.pass) ++failures;
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <path-to-simulate>\n");
    return 2;
  }
  const std::string simulate = argv[1];

  const auto cfg = load_config(IOVSIM_SOURCE_DIR "/configs/defaults.json");
  RunChecks checks;
  ExperimentOptions opt;
  opt.observer = [&](const ScenarioConfig& c, std::span<const TickLog> logs, const SybilRoster& r) { checks(c, logs, r); };

  const auto start = std::chrono::steady_clock::now();
  const auto bundle = run_experiment(cfg, opt);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::printf("default sweep: %zu runs in %.1f s\n", bundle.runs.size(), seconds);
  for (const auto& c : bundle.cells) {
    std::printf("  %-13s reopt %6.2f  J %.4f", c.cell.label().c_str(), c.reopt.mean, c.fairness.mean);
    if (c.targeted_attacked && c.na_targeted_attacked) {
      std::printf("  targeted %.3f ms / %.3f ms", c.targeted_attacked->mean, c.na_targeted_attacked->mean);
    }
    std::printf("\n");
  }

  Verdict sweep_ok;
  sweep_ok.require(bundle.all_ok() && bundle.runs.size() == 55, "sweep did not complete 55 runs");

  int failures = 0;
  Verdict c1 = reopt_trend(bundle, seconds);
  c1.require(sweep_ok.pass, "sweep incomplete");
  report(1, "re-optimization collapse", c1, failures);
  report(2, "targeted delay inflation", delay_inflation(bundle), failures);
  report(3, "fairness degradation", fairness_drop(bundle), failures);

  Verdict c4 = checks.feasibility;
  c4.require(checks.runs_seen == 55, "observer saw " + std::to_string(checks.runs_seen) + " runs");
  oracle_equivalence(c4);
  report(4, "optimizer and oracle agree", c4, failures);

  report(5, "critic numerics", critic_numerics(), failures);
  report(6, "Jain's index", jain_checks(), failures);

  Verdict c7 = checks.channel;
  c7.require(checks.poisoned_entries > 0, "no poisoned entries observed");
  c7.require(checks.ticks_compared > 0, "no ticks compared with the no-attack run");
  check_proportion_zero(c7);
  report(7, "poisoning channel integrity", c7, failures);

  report(8, "determinism", cli_determinism(simulate), failures);

  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
