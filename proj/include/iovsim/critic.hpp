#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "iovsim/common.hpp"
#include "iovsim/mobility.hpp"
#include "iovsim/netmodel.hpp"
#include "iovsim/scenario.hpp"

namespace iovsim {

/// Request demand per (edge zone, service): demand[(e-1) * S + (s-1)] is the share of this tick's
/// requests for s whose location is nearest to edge e. Sums to 1 when anyone is active.
struct StateObservation {
  int edges = 0;
  int services = 0;
  std::vector<double> demand;
  friend bool operator==(const StateObservation&, const StateObservation&) = default;
};

StateObservation build_state(std::span<const ServiceRequest> requests, const ScenarioConfig& cfg);

struct Experience {
  StateObservation state;
  std::vector<double> action;  // PlacementAction::encode, [S x E]
  double reward = 0.0;         // quality target in [0, 1]
  std::optional<StateObservation> next_state;  // only consulted when bootstrapping
};

/// Fully connected layer; weight is input-major: weight[i * out + j] connects input i to unit j.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;
  std::vector<double> bias;
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// tanh hidden layers and a single sigmoid output unit.
struct CriticParameters {
  std::vector<DenseLayer> layers;
  std::size_t input_size() const { return layers.empty() ? 0 : layers.front().in; }
  std::size_t parameter_count() const;
  friend bool operator==(const CriticParameters&, const CriticParameters&) = default;
};

/// Xavier-uniform weights, zero biases, drawn from the given seed.
CriticParameters make_critic(std::size_t input_size, const std::vector<int>& hidden, std::uint64_t seed);

/// Critic sized for a scenario: input is the [E x S] state followed by the [S x E] action.
CriticParameters make_critic(const ScenarioConfig& cfg, std::uint64_t seed);

double quality(const CriticParameters& params, const StateObservation& state, std::span<const double> action);
double quality(const CriticParameters& params, std::span<const double> features);

/// exp(-avg_delay / quality_scale); throws DomainError unless both are positive.
double target_value(double avg_delay, double quality_scale);

/// Mean squared error between targets and critic outputs over the batch.
double loss(const CriticParameters& params, std::span<const Experience* const> batch);
double loss(const CriticParameters& params, std::span<const Experience> batch);

struct LossGradient {
  double loss = 0.0;
  CriticParameters grad;  // same shapes as the parameters
};

/// Analytic gradient of `loss` by backpropagation. `targets` overrides the stored rewards when
/// non-empty (bootstrapped targets).
LossGradient loss_gradient(const CriticParameters& params, std::span<const Experience* const> batch,
                           std::span<const double> targets = {});

/// params += -learning_rate * grad
void apply_gradient(CriticParameters& params, const CriticParameters& grad, double learning_rate);

/// Fixed-capacity ring buffer; once full, each push evicts the oldest experience.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity);

  void push(Experience exp);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// Oldest first.
  const Experience& at(std::size_t i) const { return items_.at(i); }
  Experience& newest() { return items_.back(); }
  /// n distinct experiences chosen uniformly (selection sampling, in buffer order).
  std::vector<const Experience*> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Experience> items_;
};

/// One gradient-descent step on a uniformly sampled batch. Returns the batch loss measured
/// before the step, or nullopt ("not ready") while the replay holds fewer than batch_size items.
std::optional<double> train_step(CriticParameters& params, const ReplayMemory& replay, const TrainingConfig& cfg,
                                 Rng& rng);

void save_checkpoint(const CriticParameters& params, const std::filesystem::path& path);
CriticParameters load_checkpoint(const std::filesystem::path& path);

}  // namespace iovsim
