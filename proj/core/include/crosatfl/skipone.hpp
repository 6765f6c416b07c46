#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "crosatfl/compute.hpp"

namespace crosatfl::skipone {

struct FairnessConfig {
  int cooldown_length = 2;
  int tau_max = 3;
  std::size_t all_participation_period = 10;
  double phi_decay = 0.5;

  void validate() const;
};

// Per-satellite counters, indexed by satellite id.
struct FairnessState {
  std::vector<int> cooldown;    // kappa
  std::vector<int> staleness;   // tau
  std::vector<double> history;  // phi in [0, 1]
  FairnessConfig config;

  static FairnessState initial(std::size_t satellites, FairnessConfig config = {});

  bool admissible(std::size_t id) const {
    return cooldown[id] == 0 && staleness[id] < config.tau_max;
  }
  // Rounds are 1-based; every all_participation_period-th round is forced
  // full participation.
  bool is_all_participation_round(std::size_t round) const;
};

struct SkipWeights {
  double theta_t = 1.0;
  double theta_e = 1.0;
  double theta_h = 0.5;
  double theta_f = 0.5;
  std::array<double, compute::kHardwareKinds> hw_penalty{0.2, 1.0};

  void validate() const;
};

struct Candidate {
  std::size_t id = 0;
  double delta_t_s = 0.0;
  double delta_e_j = 0.0;
  double psi = 0.0;
};

struct Selection {
  std::vector<std::size_t> participants;
  std::optional<std::size_t> skipped;
  double delta_t_s = 0.0;  // of the skipped satellite, else 0
  double delta_e_j = 0.0;
  double psi = 0.0;
  bool forced_full = false;
  double barrier_before_s = 0.0;
  double barrier_after_s = 0.0;
  std::vector<Candidate> candidates;
};

// `members` are satellite ids; `costs` is indexed by id. The master is never
// a skip candidate.
Selection select_participants(std::span<const std::size_t> members,
                              std::span<const compute::TrainingCost> costs,
                              std::span<const compute::Hardware> hardware,
                              const FairnessState& fairness, const SkipWeights& weights,
                              std::size_t round, std::optional<std::size_t> master = std::nullopt);

void update_fairness(FairnessState& fairness, std::span<const std::size_t> skipped,
                     std::span<const std::size_t> participants, std::size_t round);

}  // namespace crosatfl::skipone
