#pragma once

// Session orchestration for the on-orbit protocol, the ground-station FedAvg
// baseline and the no-skip ablation, with a per-satellite ledger and an
// auditable event log.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "crosatfl/aggregation.hpp"
#include "crosatfl/compute.hpp"
#include "crosatfl/links.hpp"
#include "crosatfl/orbits.hpp"
#include "crosatfl/policy.hpp"
#include "crosatfl/skipone.hpp"
#include "crosatfl/starmask.hpp"
#include "crosatfl/trainer.hpp"

namespace crosatfl::engine {

enum class Method { CroSatFL, FedSyn, NoSkip };

Method method_from_string(std::string_view name);
std::string_view to_string(Method method);

// Which masters a master may mix with in a round.
//   Direct:   a LISL edge between the two master satellites.
//   Multihop: same connected component of the whole constellation's LISL
//             graph (relayed by any satellite).
//   Full:     every other master.
enum class Reachability { Direct, Multihop, Full };

Reachability reachability_from_string(std::string_view name);
std::string_view to_string(Reachability mode);

struct ProfileSource {
  // When non-empty, used as-is (ids must be 0..n-1 in order and n must equal
  // client_count). Otherwise profiles are sampled.
  std::vector<compute::SatelliteProfile> inline_profiles;
  double cpu_fraction = 0.5;
  compute::ProfileDistributions distributions;
};

struct ModelSpec {
  aggregation::TrainerKind trainer = aggregation::TrainerKind::Logistic;
  aggregation::SyntheticTaskSpec task;
  double learning_rate = 0.1;
  std::size_t batch_size = 10;
  // Accounting size of one model transfer; independent of the desk-scale
  // model's real dimension.
  double model_bits = 16e6;
};

struct SessionConfig {
  orbits::ConstellationConfig constellation;
  orbits::GroundStationSpec gs;
  links::LinkParams link;
  double range_km = 1700.0;

  int main_rounds = 1;
  int edge_rounds = 40;
  int local_epochs = 10;
  std::size_t k_nbr = 4;
  std::size_t client_count = 40;
  Reachability reachability = Reachability::Multihop;

  std::uint64_t seed = 1;
  // Constellation indices of the clients; sampled from the seed when empty.
  std::vector<std::size_t> client_indices;
  ProfileSource profiles;
  ModelSpec model;

  starmask::Constraints constraints{9, 2, true, {4, 10}, 9};
  starmask::RewardWeights reward_weights;
  // Clustering policy; the greedy construction is used when null.
  std::shared_ptr<const starmask::MaskedPolicy> policy;

  skipone::FairnessConfig fairness;
  skipone::SkipWeights skip_weights;

  double start_time_s = 0.0;
  // How far ahead a ground-station window is searched before giving up.
  double gs_search_horizon_s = 30.0 * 86400.0;
  double gs_search_step_s = 10.0;

  void validate() const;
};

class InfeasibleClustering : public std::runtime_error {
 public:
  InfeasibleClustering(std::size_t k_min, const std::string& reason)
      : std::runtime_error(reason), k_min_(k_min) {}
  std::size_t k_min() const { return k_min_; }

 private:
  std::size_t k_min_;
};

struct LedgerEntry {
  double comp_energy_j = 0.0;
  double lisl_energy_j = 0.0;
  double gs_energy_j = 0.0;
  std::int64_t intra_lisl = 0;
  std::int64_t inter_lisl = 0;
  std::int64_t gs = 0;
  double transmission_time_s = 0.0;
  double waiting_time_s = 0.0;

  double transmission_energy_j() const { return lisl_energy_j + gs_energy_j; }
  LedgerEntry& operator+=(const LedgerEntry& other);
};

struct SatelliteLedger {
  std::size_t client = 0;
  std::size_t satellite = 0;  // constellation index
  LedgerEntry entry;
};

struct SessionLedger {
  std::vector<SatelliteLedger> satellites;
  LedgerEntry totals;
  // Inter-satellite transfers split by purpose; they sum to totals.inter_lisl.
  std::int64_t inter_lisl_mixing = 0;
  std::int64_t inter_lisl_consolidation = 0;
  double makespan_s = 0.0;
};

// Actor and peer use client indices; these mark the ground station and an
// absent peer.
inline constexpr std::int64_t kGroundStation = -1;
inline constexpr std::int64_t kNobody = -2;

struct Event {
  double t_s = 0.0;
  std::size_t round = 0;
  std::int64_t cluster = -1;  // -1 when not cluster-scoped
  std::int64_t actor = kNobody;
  std::string action;
  std::int64_t peer = kNobody;
  double bits = 0.0;
  double delay_s = 0.0;
  double energy_j = 0.0;
  double waiting_s = 0.0;
};

struct RoundMetrics {
  std::size_t round = 0;
  double start_s = 0.0;
  double duration_s = 0.0;
  // Largest participant training time over all clusters.
  double barrier_s = 0.0;
  double comp_energy_j = 0.0;
  // Computation plus every transfer in the round.
  double energy_j = 0.0;
  std::size_t participants = 0;
  std::size_t skipped = 0;
  std::size_t mixing_transmissions = 0;
  double eval_metric = 0.0;
};

struct SkipRecord {
  std::size_t round = 0;
  std::size_t cluster = 0;
  std::size_t satellite = 0;  // client index
  double delta_t_s = 0.0;
  double delta_e_j = 0.0;
  double psi = 0.0;
};

struct Evaluation {
  std::string metric;  // "accuracy" for logistic, "objective" for quadratic
  double value = 0.0;
  // Same metric for the centralized optimum of the pooled data.
  double reference = 0.0;
};

struct SessionResult {
  Method method = Method::CroSatFL;
  aggregation::ModelVector final_model;
  SessionLedger ledger;
  std::vector<Event> events;
  std::vector<RoundMetrics> metrics;
  std::vector<SkipRecord> skips;
  Evaluation evaluation;
  std::vector<std::size_t> client_indices;
  std::vector<compute::SatelliteProfile> profiles;
  // Empty for FedSyn.
  starmask::ClusterPartition partition;
  bool clustering_used_fallback = false;
};

// Seeded uniform sample of client_count constellation indices, sorted,
// unless the config lists them explicitly.
std::vector<std::size_t> select_clients(const SessionConfig& config);
std::vector<compute::SatelliteProfile> session_profiles(const SessionConfig& config);

// Partition over client indices. Throws InfeasibleClustering.
starmask::Construction cluster_clients(const SessionConfig& config,
                                       const std::vector<compute::SatelliteProfile>& profiles);

SessionResult run_crosatfl(const SessionConfig& config);
SessionResult run_fedsyn(const SessionConfig& config);
SessionResult run_ablation_no_skip(const SessionConfig& config);
SessionResult run(Method method, const SessionConfig& config);

// Sum of logged transfer energies, for the conservation check.
double logged_transmission_energy(const std::vector<Event>& events);

void write_event_log(std::ostream& out, const std::vector<Event>& events);
void write_metrics(std::ostream& out, const std::vector<RoundMetrics>& metrics);
void write_skips(std::ostream& out, const std::vector<SkipRecord>& skips);

// Shortest round-trip decimal form, shared by the CSV writers.
std::string format_double(double value);

}  // namespace crosatfl::engine
