#include "iovsim/actor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "iovsim/kernels/kernels.hpp"

namespace iovsim {

namespace {

constexpr int kDenseMemoMaxEdges = 16;
constexpr int kSubsetMoveMaxEdges = 10;
constexpr double kJointMoveBudget = 200000;
constexpr int kMaxLocalSearchSteps = 100000;
constexpr long kRepairNodeLimit = 2'000'000;

std::uint64_t full_mask(int edges) { return edges >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << edges) - 1; }

// Services ordered by decreasing resource requirement, lower id first on ties.
std::vector<ServiceId> by_size_desc(const ScenarioConfig& cfg) {
  std::vector<ServiceId> order(cfg.services.size());
  std::iota(order.begin(), order.end(), 1);
  std::stable_sort(order.begin(), order.end(), [&](ServiceId a, ServiceId b) {
    return cfg.service(a).resource_req > cfg.service(b).resource_req;
  });
  return order;
}

// Backtracking single-instance bin packing; nullopt when nothing fits within the node budget.
std::optional<PlacementAction> repair_assignment(const ScenarioConfig& cfg) {
  const auto order = by_size_desc(cfg);
  std::vector<double> remaining;
  for (const auto& e : cfg.edges) remaining.push_back(e.capacity);
  PlacementAction p(cfg.num_services());
  long nodes = 0;

  auto dfs = [&](auto&& self, std::size_t i) -> bool {
    if (i == order.size()) return true;
    if (++nodes > kRepairNodeLimit) return false;
    const ServiceId s = order[i];
    const double need = cfg.service(s).resource_req;
    std::vector<std::size_t> edges(remaining.size());
    std::iota(edges.begin(), edges.end(), 0);
    std::stable_sort(edges.begin(), edges.end(), [&](auto a, auto b) { return remaining[a] > remaining[b]; });
    for (std::size_t e : edges) {
      if (remaining[e] < need) continue;
      remaining[e] -= need;
      p.set_mask(s, PlacementAction::bit(static_cast<EdgeId>(e + 1)));
      if (self(self, i + 1)) return true;
      remaining[e] += need;
      p.set_mask(s, 0);
    }
    return false;
  };
  if (dfs(dfs, 0)) return p;
  return std::nullopt;
}

struct Key {
  double cost;
  double soft;  // sum of squared per-edge utilizations and per-service delay terms
  bool operator<(const Key& o) const { return cost < o.cost || (cost == o.cost && soft < o.soft); }
};

class LocalSearch {
 public:
  explicit LocalSearch(const PlacementEvaluator& eval)
      : eval_(eval), cfg_(eval.config()), S_(cfg_.num_services()), E_(cfg_.num_edges()) {}

  // Loads recomputed from scratch in service order so the same placement always yields the same
  // bits regardless of the path that reached it.
  bool feasible_loads(const std::vector<std::uint64_t>& masks, std::vector<double>& load) const {
    load.assign(static_cast<std::size_t>(E_), 0.0);
    for (int s = 0; s < S_; ++s) {
      const double r = cfg_.services[static_cast<std::size_t>(s)].resource_req;
      for (std::uint64_t m = masks[static_cast<std::size_t>(s)]; m; m &= m - 1) {
        load[static_cast<std::size_t>(std::countr_zero(m))] += r;
      }
    }
    for (int e = 0; e < E_; ++e) {
      if (load[static_cast<std::size_t>(e)] > cfg_.edges[static_cast<std::size_t>(e)].capacity) return false;
    }
    return true;
  }

  Key key(const std::vector<std::uint64_t>& masks, const std::vector<double>& load) const {
    double max_u = 0.0, soft = 0.0;
    for (int e = 0; e < E_; ++e) {
      const double u = load[static_cast<std::size_t>(e)] / cfg_.edges[static_cast<std::size_t>(e)].capacity;
      max_u = std::max(max_u, u);
      soft += cfg_.alpha * u * u;
    }
    double max_d = 0.0;
    for (int s = 0; s < S_; ++s) {
      const double d = eval_.delay_term(s + 1, masks[static_cast<std::size_t>(s)]);
      max_d = std::max(max_d, d);
      soft += (1.0 - cfg_.alpha) * d * d;
    }
    return {cfg_.alpha * max_u + (1.0 - cfg_.alpha) * max_d, soft};
  }

  // Candidates in one k-service joint reassignment scan: C(S, k) * (2^E - 1)^k.
  double joint_neighbourhood_size(int k) const {
    double n = std::pow(std::ldexp(1.0, E_) - 1.0, k);
    for (int i = 0; i < k; ++i) n *= static_cast<double>(S_ - i) / static_cast<double>(i + 1);
    return n;
  }

  template <typename Consider>
  void joint_scan(const std::vector<int>& pick, std::size_t depth, std::uint64_t all,
                  const std::vector<std::uint64_t>& cur, std::vector<std::uint64_t>& cand, Consider& consider) const {
    if (depth == pick.size()) {
      consider();
      return;
    }
    const auto si = static_cast<std::size_t>(pick[depth]);
    for (std::uint64_t m = 1; m <= all; ++m) {
      cand[si] = m;
      joint_scan(pick, depth + 1, all, cur, cand, consider);
    }
    cand[si] = cur[si];
  }

  std::pair<PlacementAction, int> run(PlacementAction start) {
    std::vector<std::uint64_t> cur = start.masks();
    std::vector<double> load;
    if (!feasible_loads(cur, load)) throw std::logic_error("local search started from an infeasible placement");
    Key best_key = key(cur, load);
    const std::uint64_t all = full_mask(E_);
    int moves = 0;

    std::vector<std::uint64_t> cand = cur;
    for (int step = 0; step < kMaxLocalSearchSteps; ++step) {
      std::vector<std::uint64_t> best = cur;
      Key step_key = best_key;
      auto consider = [&] {
        if (!feasible_loads(cand, load)) return;
        const Key k = key(cand, load);
        if (k < step_key) {
          step_key = k;
          best = cand;
        }
      };

      for (int s = 0; s < S_; ++s) {
        const auto si = static_cast<std::size_t>(s);
        const std::uint64_t own = cur[si];
        if (E_ <= kSubsetMoveMaxEdges) {
          for (std::uint64_t m = 1; m <= all; ++m) {
            if (m == own) continue;
            cand[si] = m;
            consider();
          }
        } else {
          for (int e = 0; e < E_; ++e) {
            const std::uint64_t b = std::uint64_t{1} << e;
            if (own & b) {
              if (std::popcount(own) > 1) {  // remove
                cand[si] = own & ~b;
                consider();
              }
              for (int f = 0; f < E_; ++f) {  // relocate
                const std::uint64_t c = std::uint64_t{1} << f;
                if (own & c) continue;
                cand[si] = (own & ~b) | c;
                consider();
              }
            } else {  // add
              cand[si] = own | b;
              consider();
            }
          }
        }
        cand[si] = own;
      }

      // Exchange one instance between two services.
      for (int s1 = 0; s1 < S_; ++s1) {
        for (int s2 = s1 + 1; s2 < S_; ++s2) {
          const auto i1 = static_cast<std::size_t>(s1), i2 = static_cast<std::size_t>(s2);
          const std::uint64_t h1 = cur[i1], h2 = cur[i2];
          for (std::uint64_t a = h1 & ~h2; a; a &= a - 1) {
            const std::uint64_t b1 = a & (~a + 1);
            for (std::uint64_t b = h2 & ~h1; b; b &= b - 1) {
              const std::uint64_t b2 = b & (~b + 1);
              cand[i1] = (h1 & ~b1) | b2;
              cand[i2] = (h2 & ~b2) | b1;
              consider();
            }
          }
          cand[i1] = h1;
          cand[i2] = h2;
        }
      }

      // Escape from a local optimum by reassigning k services jointly, k = 2, 3, ... while the
      // neighbourhood stays within budget. Capacity often couples services so that none can
      // move alone.
      if (!(step_key < best_key) && E_ <= kSubsetMoveMaxEdges) {
        for (int k = 2; k <= S_ && !(step_key < best_key); ++k) {
          if (joint_neighbourhood_size(k) > kJointMoveBudget) break;
          std::vector<int> pick(static_cast<std::size_t>(k));
          std::iota(pick.begin(), pick.end(), 0);
          while (true) {
            joint_scan(pick, 0, all, cur, cand, consider);
            int i = k - 1;
            while (i >= 0 && pick[static_cast<std::size_t>(i)] == S_ - k + i) --i;
            if (i < 0) break;
            ++pick[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < k; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
          }
        }
      }

      if (!(step_key < best_key)) break;
      cur = best;
      cand = cur;
      best_key = step_key;
      ++moves;
    }
    return {PlacementAction::from_masks(cur), moves};
  }

 private:
  const PlacementEvaluator& eval_;
  const ScenarioConfig& cfg_;
  int S_;
  int E_;
};

}  // namespace

PlacementEvaluator::PlacementEvaluator(std::span<const ServiceRequest> snapshot, const ScenarioConfig& cfg)
    : cfg_(&cfg), columns_(cfg.services.size()) {
  const auto E = cfg.edges.size();
  dense_memo_ = static_cast<int>(E) <= kDenseMemoMaxEdges;
  const DistanceMatrix dist(snapshot, cfg.edges);

  std::vector<std::vector<std::size_t>> members(cfg.services.size());
  for (std::size_t k = 0; k < snapshot.size(); ++k) {
    const ServiceId s = snapshot[k].service_id;
    if (s < 1 || s > cfg.num_services()) throw std::out_of_range("request for unknown service " + std::to_string(s));
    members[idx(s)].push_back(k);
  }
  const auto& dm = cfg.delay_model;
  for (std::size_t s = 0; s < columns_.size(); ++s) {
    auto& c = columns_[s];
    c.n = members[s].size();
    c.delays.resize(E * c.n);
    for (std::size_t e = 0; e < E; ++e) {
      for (std::size_t j = 0; j < c.n; ++j) {
        c.delays[e * c.n + j] = dm.proc_delay + dm.per_meter_delay * dist.at(static_cast<EdgeId>(e + 1), members[s][j]);
      }
    }
    if (dense_memo_) c.memo.assign(std::size_t{1} << E, std::numeric_limits<double>::quiet_NaN());
  }
}

double PlacementEvaluator::compute_mean(const ServiceColumns& c, std::uint64_t mask) const {
  if (mask == 0) return cfg_->delay_model.cloud_fallback_delay;
  const double* cols[64];
  std::size_t ncols = 0;
  for (std::uint64_t m = mask; m; m &= m - 1) {
    cols[ncols++] = c.delays.data() + static_cast<std::size_t>(std::countr_zero(m)) * c.n;
  }
  return kernels::min_columns_sum({cols, ncols}, c.n) / static_cast<double>(c.n);
}

std::optional<double> PlacementEvaluator::service_delay(ServiceId s, std::uint64_t mask) const {
  const auto& c = columns_[idx(s)];
  if (c.n == 0) return std::nullopt;
  if (!dense_memo_) return compute_mean(c, mask);
  double& slot = c.memo[mask];
  if (std::isnan(slot)) slot = compute_mean(c, mask);
  return slot;
}

double PlacementEvaluator::delay_term(ServiceId s, std::uint64_t mask) const {
  const auto d = service_delay(s, mask);
  if (!d) return 0.0;
  return cfg_->delay_normalization == DelayNormalization::Raw ? *d : *d / cfg_->service(s).delay_threshold;
}

double PlacementEvaluator::max_utilization(const PlacementAction& placement) const {
  const auto u = utilization(placement, cfg_->services, cfg_->edges);
  return u.empty() ? 0.0 : *std::max_element(u.begin(), u.end());
}

double PlacementEvaluator::max_delay_term(const PlacementAction& placement) const {
  double worst = 0.0;
  for (int s = 1; s <= cfg_->num_services(); ++s) worst = std::max(worst, delay_term(s, placement.mask(s)));
  return worst;
}

double PlacementEvaluator::cost(const PlacementAction& placement) const {
  return cfg_->alpha * max_utilization(placement) + (1.0 - cfg_->alpha) * max_delay_term(placement);
}

double objective(const PlacementAction& placement, std::span<const ServiceRequest> snapshot,
                 const ScenarioConfig& cfg) {
  return PlacementEvaluator(snapshot, cfg).cost(placement);
}

bool placement_precedes(const PlacementAction& a, const PlacementAction& b) {
  const int ia = a.instance_count(), ib = b.instance_count();
  if (ia != ib) return ia < ib;
  for (int s = 1; s <= std::min(a.num_services(), b.num_services()); ++s) {
    const auto ha = a.host_list(s), hb = b.host_list(s);
    if (ha != hb) return std::lexicographical_compare(ha.begin(), ha.end(), hb.begin(), hb.end());
  }
  return false;
}

PlacementAction greedy_placement(const PlacementEvaluator& eval) {
  const auto& cfg = eval.config();
  const int E = cfg.num_edges();
  std::vector<PlacementAction> candidates;

  // Cost-greedy: the partial cost only counts services placed so far.
  {
    PlacementAction p(cfg.num_services());
    std::vector<double> remaining;
    for (const auto& e : cfg.edges) remaining.push_back(e.capacity);
    std::vector<bool> placed(cfg.services.size(), false);
    bool ok = true;
    for (ServiceId s : by_size_desc(cfg)) {
      const double need = cfg.service(s).resource_req;
      double best_cost = std::numeric_limits<double>::infinity();
      int best_edge = -1;
      placed[static_cast<std::size_t>(s - 1)] = true;
      for (int e = 0; e < E; ++e) {
        if (remaining[static_cast<std::size_t>(e)] < need) continue;
        p.set_mask(s, std::uint64_t{1} << e);
        double max_u = 0.0, max_d = 0.0;
        for (int f = 0; f < E; ++f) {
          const double load = cfg.edges[static_cast<std::size_t>(f)].capacity - remaining[static_cast<std::size_t>(f)] +
                              (f == e ? need : 0.0);
          max_u = std::max(max_u, load / cfg.edges[static_cast<std::size_t>(f)].capacity);
        }
        for (int t = 1; t <= cfg.num_services(); ++t) {
          if (placed[static_cast<std::size_t>(t - 1)]) max_d = std::max(max_d, eval.delay_term(t, p.mask(t)));
        }
        const double c = cfg.alpha * max_u + (1.0 - cfg.alpha) * max_d;
        if (c < best_cost) {
          best_cost = c;
          best_edge = e;
        }
      }
      if (best_edge < 0) {
        ok = false;
        break;
      }
      p.set_mask(s, std::uint64_t{1} << best_edge);
      remaining[static_cast<std::size_t>(best_edge)] -= need;
    }
    if (ok) candidates.push_back(p);
  }

  // All services on a single edge.
  for (int e = 1; e <= E; ++e) {
    PlacementAction p(cfg.num_services());
    for (int s = 1; s <= cfg.num_services(); ++s) p.add(s, e);
    if (capacity_feasible(p, cfg.services, cfg.edges)) candidates.push_back(p);
  }

  if (candidates.empty()) {
    if (auto repaired = repair_assignment(cfg)) return *repaired;
    throw InfeasibleError("no capacity-respecting placement found by greedy construction and repair");
  }

  std::size_t best = 0;
  double best_cost = eval.cost(candidates[0]);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double c = eval.cost(candidates[i]);
    if (c < best_cost || (c == best_cost && placement_precedes(candidates[i], candidates[best]))) {
      best_cost = c;
      best = i;
    }
  }
  return candidates[best];
}

OptimizeResult optimize_placement_detailed(std::span<const ServiceRequest> snapshot, const ScenarioConfig& cfg,
                                           const std::optional<PlacementAction>& incumbent) {
  const PlacementEvaluator eval(snapshot, cfg);
  LocalSearch search(eval);

  const PlacementAction greedy = greedy_placement(eval);
  OptimizeResult result;
  result.greedy_cost = eval.cost(greedy);
  auto [placement, moves] = search.run(greedy);
  result.placement = std::move(placement);
  result.cost = eval.cost(result.placement);
  result.improving_moves = moves;

  if (incumbent && incumbent->num_services() == cfg.num_services() && incumbent->every_service_hosted() &&
      capacity_feasible(*incumbent, cfg.services, cfg.edges)) {
    auto [from_incumbent, more] = search.run(*incumbent);
    const double c = eval.cost(from_incumbent);
    if (c < result.cost || (c == result.cost && placement_precedes(from_incumbent, result.placement))) {
      result.placement = std::move(from_incumbent);
      result.cost = c;
      result.improving_moves = more;
    }
  }

  if (!capacity_feasible(result.placement, cfg.services, cfg.edges) || !result.placement.every_service_hosted()) {
    throw std::logic_error("optimizer produced an invalid placement: " + result.placement.to_string());
  }
  return result;
}

PlacementAction optimize_placement(std::span<const ServiceRequest> snapshot, const ScenarioConfig& cfg,
                                   const std::optional<PlacementAction>& incumbent) {
  return optimize_placement_detailed(snapshot, cfg, incumbent).placement;
}

PlacementAction exhaustive_oracle(std::span<const ServiceRequest> snapshot, const ScenarioConfig& cfg) {
  const int S = cfg.num_services(), E = cfg.num_edges();
  if (S > kOracleMaxServices || E > kOracleMaxEdges) {
    throw std::length_error("exhaustive oracle limited to S <= 3 and E <= 3 (got S=" + std::to_string(S) +
                            ", E=" + std::to_string(E) + ")");
  }
  const PlacementEvaluator eval(snapshot, cfg);
  const std::uint64_t per_service = full_mask(E);  // non-empty masks are 1..per_service

  std::optional<PlacementAction> best;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<std::uint64_t> masks(static_cast<std::size_t>(S), 1);
  while (true) {
    const PlacementAction p = PlacementAction::from_masks(masks);
    if (capacity_feasible(p, cfg.services, cfg.edges)) {
      const double c = eval.cost(p);
      if (!best || c < best_cost || (c == best_cost && placement_precedes(p, *best))) {
        best = p;
        best_cost = c;
      }
    }
    int i = 0;
    while (i < S && masks[static_cast<std::size_t>(i)] == per_service) masks[static_cast<std::size_t>(i++)] = 1;
    if (i == S) break;
    ++masks[static_cast<std::size_t>(i)];
  }
  if (!best) throw InfeasibleError("no capacity-feasible placement exists");
  return *best;
}

PlacementAction cold_start_placement(const ScenarioConfig& cfg) {
  PlacementAction p(cfg.num_services());
  std::vector<double> remaining;
  for (const auto& e : cfg.edges) remaining.push_back(e.capacity);
  for (ServiceId s : by_size_desc(cfg)) {
    const double need = cfg.service(s).resource_req;
    auto it = std::find_if(remaining.begin(), remaining.end(), [&](double r) { return r >= need; });
    if (it == remaining.end()) {
      if (auto repaired = repair_assignment(cfg)) return *repaired;
      throw InfeasibleError("no capacity-respecting cold-start placement");
    }
    *it -= need;
    p.set_mask(s, PlacementAction::bit(static_cast<EdgeId>(it - remaining.begin() + 1)));
  }
  return p;
}

}  // namespace iovsim
