#pragma once

// Constrained satellite clustering: sequential assignment with action
// masking, terminal reward, deterministic greedy fallback and an exhaustive
// oracle for small instances. The learned policy lives in policy.hpp.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "crosatfl/compute.hpp"
#include "crosatfl/links.hpp"
#include "crosatfl/master_selection.hpp"

namespace crosatfl {
class Rng;
}

namespace crosatfl::starmask {

struct Constraints {
  std::size_t k_max = 9;
  std::size_t m_min = 2;
  bool homogeneous = true;
  CapacityLimits capacity_limits{4, 10};
  // Cluster count the fallback aims for; clamped into the feasible range.
  // Unset means the smallest feasible count.
  std::optional<std::size_t> k_target;

  void validate() const;
};

// Profiles plus the derived quantities every StarMask step needs.
struct Instance {
  std::vector<compute::SatelliteProfile> profiles;
  std::vector<compute::TrainingCost> costs;
  std::vector<double> shares;
  int local_epochs = 1;

  std::size_t size() const { return profiles.size(); }
};

Instance make_instance(std::vector<compute::SatelliteProfile> profiles, int local_epochs);

struct ClusterSummary {
  std::size_t size = 0;
  double t_min_s = 0.0;
  double t_max_s = 0.0;
  double energy_sum_j = 0.0;
  double share_sum = 0.0;
  std::array<std::size_t, compute::kHardwareKinds> hw_counts{};
  // Largest effective capacity among members; remaining = this - (size - 1).
  int max_capacity = 0;
  int remaining_capacity = 0;
  bool active = false;
};

struct AssignmentState {
  std::size_t step = 0;  // index of the satellite being placed
  std::vector<ClusterSummary> summaries;  // always k_max entries
  std::size_t k_open = 0;
  std::vector<std::size_t> assignment;  // cluster index of each placed satellite

  static AssignmentState initial(std::size_t k_max);
  bool done(const Instance& instance) const { return step >= instance.size(); }
};

// Action a < k_max joins cluster a; a == k_max opens a new cluster.
using Action = std::size_t;

std::vector<Action> feasible_actions(const AssignmentState& state, const Instance& instance,
                                     const Constraints& constraints);

// Places the current satellite. The action must be feasible.
void apply_action(AssignmentState& state, const Instance& instance,
                  const Constraints& constraints, Action action);

struct ClusterPartition {
  std::vector<std::vector<std::size_t>> clusters;  // indices into the instance
  std::vector<std::size_t> masters;
  std::size_t k() const { return clusters.size(); }
};

// Empty string when the partition satisfies disjointness, coverage,
// master membership, minimum size and master capacity; otherwise a
// description of the first violation.
std::string partition_violation(const ClusterPartition& partition, const Instance& instance,
                                const Constraints& constraints);

// Also checks k <= k_max and, in homogeneous mode, one hardware kind per
// cluster.
std::string constraint_violation(const ClusterPartition& partition, const Instance& instance,
                                 const Constraints& constraints);

struct NormRange {
  double min = 0.0;
  double max = 1.0;
};

enum RewardTerm : std::size_t { kWait = 0, kEnergy, kShareVar, kCount, kMix, kRewardTerms };

struct RewardWeights {
  double theta_wait = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double nu_count = 0.1;
  double lambda_mix = 1.0;
  std::array<NormRange, kRewardTerms> norm_ranges{};

  void validate() const;
  double weight(RewardTerm term) const;
};

// Link model used for the intra-cluster part of E_tot.
struct RewardContext {
  links::LinkParams link;
  double model_bits = 16e6;
};

struct RewardBreakdown {
  std::array<double, kRewardTerms> raw{};
  std::array<double, kRewardTerms> normalized{};
  std::array<double, kRewardTerms> weighted{};
  double reward = 0.0;
};

double waiting_mismatch(const ClusterPartition& partition, const Instance& instance);
double total_energy(const ClusterPartition& partition, const Instance& instance,
                    const RewardContext& context);
double share_variance(const ClusterPartition& partition, const Instance& instance);
std::size_t mixed_clusters(const ClusterPartition& partition, const Instance& instance);

RewardBreakdown terminal_reward(const ClusterPartition& partition, const Instance& instance,
                                const RewardWeights& weights, const RewardContext& context);

struct Infeasible {
  std::size_t k_min = 0;
  std::string reason;
};

using ClusteringResult = std::variant<ClusterPartition, Infeasible>;

// Lower bound on the cluster count from effective capacities alone.
std::size_t capacity_lower_bound(const Instance& instance, const Constraints& constraints);

// Deterministic construction: fixes the cluster count, seeds clusters with
// the highest-capacity satellites, then places the rest in descending
// per-epoch time order into the cluster with the most remaining capacity,
// reserving satellites for clusters still below m_min.
ClusteringResult greedy_fallback(const Instance& instance, const Constraints& constraints);

// Builds a partition from a finished state; masters via master_selection.
ClusterPartition partition_from_state(const AssignmentState& state, const Instance& instance,
                                      const Constraints& constraints);

ClusterPartition canonical(ClusterPartition partition, const Instance& instance,
                           const Constraints& constraints);

struct BruteForceResult {
  ClusterPartition best;
  RewardBreakdown best_reward;
  double worst_reward = 0.0;
  std::size_t feasible_count = 0;
};

inline constexpr std::size_t kBruteForceMaxN = 8;

// Exhaustive search over set partitions (N <= 8). Ties on reward go to fewer
// clusters, then lexicographically smaller membership.
std::variant<BruteForceResult, Infeasible> brute_force_partition(const Instance& instance,
                                                                 const Constraints& constraints,
                                                                 const RewardWeights& weights,
                                                                 const RewardContext& context);

using ActionChooser = std::function<Action(const AssignmentState&, std::span<const Action>)>;

struct Construction {
  ClusteringResult result;
  bool used_fallback = false;
};

// Sequential masked assignment in instance order. An empty mask, or a
// finished state that leaves a cluster under m_min, hands over to
// greedy_fallback.
Construction construct(const Instance& instance, const Constraints& constraints,
                       const ActionChooser& choose);

// Uniformly random masked construction (fallback when the mask empties).
ClusteringResult random_feasible_partition(const Instance& instance, const Constraints& constraints,
                                           Rng& rng);

// Min/max of each raw reward term over `samples_per_instance` random
// feasible partitions of every instance. Degenerate ranges are widened to
// unit width.
std::array<NormRange, kRewardTerms> estimate_norm_ranges(std::span<const Instance> instances,
                                                         const Constraints& constraints,
                                                         const RewardContext& context,
                                                         std::size_t samples_per_instance,
                                                         std::uint64_t seed);

}  // namespace crosatfl::starmask
