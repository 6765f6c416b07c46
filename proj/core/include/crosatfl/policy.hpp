#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crosatfl/starmask.hpp"

namespace crosatfl::starmask {

inline constexpr std::size_t kSatFeatures = 5;
inline constexpr std::size_t kClusterFeatures = 11;
inline constexpr std::size_t kGlobalFeatures = 2;

// Inputs seen by the policy at one decision step.
struct Observation {
  std::vector<double> sat;                    // kSatFeatures
  std::vector<std::vector<double>> clusters;  // k_max x kClusterFeatures
  std::vector<bool> active;                   // k_max
  std::vector<double> global;                 // kGlobalFeatures
};

Observation observe(const AssignmentState& state, const Instance& instance,
                    const Constraints& constraints);

struct PolicyShape {
  std::size_t k_max = 9;
  std::size_t attention_dim = 8;
  std::size_t hidden = 16;
};

struct PolicyOutput {
  std::vector<double> logits;  // k_max + 1
  double value = 0.0;
};

// Single-head dot-product attention (query from the satellite, keys and
// values from active cluster summaries), a shared two-layer scorer per
// cluster slot, a two-layer OpenNew scorer and a two-layer critic.
class MaskedPolicy {
 public:
  MaskedPolicy() = default;
  MaskedPolicy(PolicyShape shape, std::uint64_t seed);

  const PolicyShape& shape() const { return shape_; }
  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  PolicyOutput forward(const Observation& obs) const;

  // Masked action distribution; zero outside `feasible`.
  std::vector<double> probabilities(const Observation& obs, std::span<const Action> feasible) const;

  // Gradient of
  //   -advantage * log pi(action) - entropy_coef * H(pi) + value_coef * 0.5 * (V - target)^2
  // accumulated into `grad` (same layout as parameters()). Returns the loss.
  double accumulate_gradient(const Observation& obs, std::span<const Action> feasible, Action action,
                             double advantage, double value_target, double entropy_coef,
                             double value_coef, std::span<double> grad) const;

 private:
  struct Layout;
  Layout layout() const;

  PolicyShape shape_;
  std::vector<double> params_;
};

enum class EpisodeMode { Sample, Greedy };

struct EpisodeResult {
  ClusteringResult result;
  bool used_fallback = false;
};

EpisodeResult run_clustering_episode(const Instance& instance, const MaskedPolicy& policy,
                                     const Constraints& constraints, EpisodeMode mode, Rng* rng);

struct TrainHyper {
  std::size_t episodes = 2000;
  double learning_rate = 3e-3;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  std::uint64_t seed = 1;
  std::size_t moving_average_window = 50;
};

struct TrainResult {
  MaskedPolicy policy;
  std::vector<double> rewards;         // per episode
  std::vector<double> moving_average;  // per episode, trailing window
  std::size_t fallback_episodes = 0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Episodic actor-critic with Adam; deterministic given hyper.seed.
TrainResult train_policy(std::span<const Instance> instances, const Constraints& constraints,
                         const RewardWeights& weights, const RewardContext& context,
                         const TrainHyper& hyper, PolicyShape shape = {});

// Versioned text file: header lines then one parameter per line.
struct PolicyFile {
  MaskedPolicy policy;
  TrainHyper hyper;
  RewardWeights weights;
};

void save_policy(std::ostream& out, const PolicyFile& file);
PolicyFile load_policy(std::istream& in);

}  // namespace crosatfl::starmask
