#include "iovsim/critic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "iovsim/kernels/kernels.hpp"

namespace iovsim {

namespace {

constexpr const char* kCheckpointMagic = "iovsim-critic";
constexpr int kCheckpointVersion = 1;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<double> features(const StateObservation& state, std::span<const double> action) {
  std::vector<double> x(state.demand);
  x.insert(x.end(), action.begin(), action.end());
  return x;
}

// Post-activation outputs of every layer, input first.
std::vector<std::vector<double>> forward(const CriticParameters& params, std::span<const double> x) {
  if (params.layers.empty()) throw ShapeError("critic has no layers");
  if (x.size() != params.input_size()) {
    throw ShapeError("critic input has " + std::to_string(x.size()) + " features, expected " +
                     std::to_string(params.input_size()));
  }
  std::vector<std::vector<double>> acts;
  acts.reserve(params.layers.size() + 1);
  acts.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    std::vector<double> z(layer.bias);
    kernels::dense_accumulate(layer.weight, acts.back(), z);
    const bool last = l + 1 == params.layers.size();
    for (double& v : z) v = last ? sigmoid(v) : std::tanh(v);
    acts.push_back(std::move(z));
  }
  return acts;
}

CriticParameters zeros_like(const CriticParameters& p) {
  CriticParameters g = p;
  for (auto& l : g.layers) {
    std::fill(l.weight.begin(), l.weight.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  return g;
}

}  // namespace

StateObservation build_state(std::span<const ServiceRequest> requests, const ScenarioConfig& cfg) {
  StateObservation st{cfg.num_edges(), cfg.num_services(), {}};
  st.demand.assign(static_cast<std::size_t>(st.edges * st.services), 0.0);
  if (requests.empty()) return st;
  const DistanceMatrix dist(requests, cfg.edges);
  for (std::size_t k = 0; k < requests.size(); ++k) {
    int zone = 0;
    for (int e = 1; e < st.edges; ++e) {
      if (dist.at(e + 1, k) < dist.at(zone + 1, k)) zone = e;
    }
    st.demand[static_cast<std::size_t>(zone * st.services + requests[k].service_id - 1)] += 1.0;
  }
  const double n = static_cast<double>(requests.size());
  for (double& v : st.demand) v /= n;
  return st;
}

std::size_t CriticParameters::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

CriticParameters make_critic(std::size_t input_size, const std::vector<int>& hidden, std::uint64_t seed) {
  Rng rng = make_stream(seed, {stream::kCritic});
  CriticParameters p;
  std::size_t in = input_size;
  std::vector<std::size_t> widths;
  for (int w : hidden) widths.push_back(static_cast<std::size_t>(w));
  widths.push_back(1);
  for (std::size_t out : widths) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    DenseLayer layer{in, out, std::vector<double>(in * out), std::vector<double>(out, 0.0)};
    for (double& w : layer.weight) w = u(rng);
    p.layers.push_back(std::move(layer));
    in = out;
  }
  return p;
}

CriticParameters make_critic(const ScenarioConfig& cfg, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(cfg.num_edges() * cfg.num_services());
  return make_critic(2 * n, cfg.training.hidden_layers, seed);
}

double quality(const CriticParameters& params, std::span<const double> x) { return forward(params, x).back()[0]; }

double quality(const CriticParameters& params, const StateObservation& state, std::span<const double> action) {
  if (state.demand.size() != static_cast<std::size_t>(state.edges * state.services) ||
      action.size() != state.demand.size()) {
    throw ShapeError("state [" + std::to_string(state.edges) + " x " + std::to_string(state.services) +
                     "] and action of size " + std::to_string(action.size()) + " do not match");
  }
  return quality(params, features(state, action));
}

double target_value(double avg_delay, double quality_scale) {
  if (!(avg_delay > 0.0)) throw DomainError("target_value: average delay must be > 0");
  if (!(quality_scale > 0.0)) throw DomainError("target_value: quality scale must be > 0");
  return std::exp(-avg_delay / quality_scale);
}

double loss(const CriticParameters& params, std::span<const Experience* const> batch) {
  if (batch.empty()) throw std::invalid_argument("loss: empty batch");
  double sum = 0.0;
  for (const Experience* e : batch) {
    const double r = e->reward - quality(params, e->state, e->action);
    sum += r * r;
  }
  return sum / static_cast<double>(batch.size());
}

double loss(const CriticParameters& params, std::span<const Experience> batch) {
  std::vector<const Experience*> ptrs;
  for (const auto& e : batch) ptrs.push_back(&e);
  return loss(params, ptrs);
}

LossGradient loss_gradient(const CriticParameters& params, std::span<const Experience* const> batch,
                           std::span<const double> targets) {
  if (batch.empty()) throw std::invalid_argument("loss_gradient: empty batch");
  if (!targets.empty() && targets.size() != batch.size()) throw ShapeError("loss_gradient: targets/batch size mismatch");
  LossGradient out{0.0, zeros_like(params)};
  const double n = static_cast<double>(batch.size());

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Experience& e = *batch[b];
    if (e.action.size() != e.state.demand.size()) throw ShapeError("experience state/action size mismatch");
    const auto acts = forward(params, features(e.state, e.action));
    const double q = acts.back()[0];
    const double y = targets.empty() ? e.reward : targets[b];
    out.loss += (y - q) * (y - q);

    // dL/dz at the sigmoid output.
    std::vector<double> delta{-2.0 * (y - q) / n * q * (1.0 - q)};
    for (std::size_t l = params.layers.size(); l-- > 0;) {
      const auto& layer = params.layers[l];
      auto& g = out.grad.layers[l];
      const auto& input = acts[l];
      for (std::size_t i = 0; i < layer.in; ++i) {
        kernels::axpy(input[i], delta, {g.weight.data() + i * layer.out, layer.out});
      }
      kernels::axpy(1.0, delta, g.bias);
      if (l == 0) break;
      std::vector<double> prev(layer.in);
      for (std::size_t i = 0; i < layer.in; ++i) {
        const double back = kernels::dot({layer.weight.data() + i * layer.out, layer.out}, delta);
        prev[i] = back * (1.0 - input[i] * input[i]);  // tanh'
      }
      delta = std::move(prev);
    }
  }
  out.loss /= n;
  return out;
}

void apply_gradient(CriticParameters& params, const CriticParameters& grad, double learning_rate) {
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    kernels::axpy(-learning_rate, grad.layers[l].weight, params.layers[l].weight);
    kernels::axpy(-learning_rate, grad.layers[l].bias, params.layers[l].bias);
  }
}

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be >= 1");
}

void ReplayMemory::push(Experience exp) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(exp));
}

std::vector<const Experience*> ReplayMemory::sample(std::size_t n, Rng& rng) const {
  std::vector<std::size_t> idx(items_.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::size_t> chosen;
  std::sample(idx.begin(), idx.end(), std::back_inserter(chosen), n, rng);
  std::vector<const Experience*> out;
  for (auto i : chosen) out.push_back(&items_[i]);
  return out;
}

std::optional<double> train_step(CriticParameters& params, const ReplayMemory& replay, const TrainingConfig& cfg,
                                 Rng& rng) {
  if (cfg.batch_size < 1) throw std::invalid_argument("train_step: batch_size must be >= 1");
  const auto n = static_cast<std::size_t>(cfg.batch_size);
  if (replay.size() < n) return std::nullopt;
  const auto batch = replay.sample(n, rng);

  std::vector<double> targets;
  if (cfg.bootstrap_gamma > 0.0) {
    for (const Experience* e : batch) {
      double y = e->reward;
      if (e->next_state) {
        y = (1.0 - cfg.bootstrap_gamma) * y + cfg.bootstrap_gamma * quality(params, *e->next_state, e->action);
      }
      targets.push_back(y);
    }
  }
  const LossGradient lg = loss_gradient(params, batch, targets);
  apply_gradient(params, lg.grad, cfg.learning_rate);
  return lg.loss;
}

void save_checkpoint(const CriticParameters& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n' << "layers " << params.layers.size() << '\n';
  out << std::hexfloat;
  for (const auto& l : params.layers) {
    out << "layer " << l.in << ' ' << l.out << '\n';
    for (std::size_t i = 0; i < l.weight.size(); ++i) out << l.weight[i] << ((i + 1) % l.out ? ' ' : '\n');
    for (std::size_t j = 0; j < l.bias.size(); ++j) out << l.bias[j] << (j + 1 < l.bias.size() ? ' ' : '\n');
  }
  if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
}

CriticParameters load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint '" + path.string() + "'");
  auto bad = [&](const std::string& what) { return IoError("checkpoint '" + path.string() + "': " + what); };

  std::string magic, word;
  int version = 0;
  std::size_t count = 0;
  if (!(in >> magic >> version) || magic != kCheckpointMagic) throw bad("not a critic checkpoint");
  if (version != kCheckpointVersion) throw bad("unsupported version " + std::to_string(version));
  if (!(in >> word >> count) || word != "layers") throw bad("missing layer count");

  // Hex floats go through strtod; stream extraction of hexfloat is unreliable across libraries.
  auto read_double = [&]() {
    std::string tok;
    if (!(in >> tok)) throw bad("truncated tensor data");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) throw bad("bad number '" + tok + "'");
    return v;
  };

  CriticParameters p;
  for (std::size_t l = 0; l < count; ++l) {
    DenseLayer layer;
    if (!(in >> word >> layer.in >> layer.out) || word != "layer") throw bad("bad layer header");
    layer.weight.resize(layer.in * layer.out);
    layer.bias.resize(layer.out);
    for (double& w : layer.weight) w = read_double();
    for (double& b : layer.bias) b = read_double();
    if (!p.layers.empty() && p.layers.back().out != layer.in) throw bad("layer shapes do not chain");
    p.layers.push_back(std::move(layer));
  }
  if (p.layers.empty() || p.layers.back().out != 1) throw bad("output layer must have one unit");
  return p;
}

}  // namespace iovsim
