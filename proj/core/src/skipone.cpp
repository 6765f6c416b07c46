#include "crosatfl/skipone.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace crosatfl::skipone {

void FairnessConfig::validate() const {
  if (cooldown_length < 1) throw std::invalid_argument("cooldown_length must be >= 1");
  if (tau_max < 1) throw std::invalid_argument("tau_max must be >= 1");
  if (all_participation_period < 1) throw std::invalid_argument("all_participation_period must be >= 1");
  if (!(phi_decay >= 0.0 && phi_decay <= 1.0)) throw std::invalid_argument("phi_decay must lie in [0, 1]");
}

FairnessState FairnessState::initial(std::size_t satellites, FairnessConfig config) {
  config.validate();
  FairnessState s;
  s.cooldown.assign(satellites, 0);
  s.staleness.assign(satellites, 0);
  s.history.assign(satellites, 1.0);
  s.config = config;
  return s;
}

bool FairnessState::is_all_participation_round(std::size_t round) const {
  return round % config.all_participation_period == 0;
}

void SkipWeights::validate() const {
  for (double w : {theta_t, theta_e, theta_h, theta_f, hw_penalty[0], hw_penalty[1]}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("skip weights must be >= 0");
  }
}

Selection select_participants(std::span<const std::size_t> members,
                              std::span<const compute::TrainingCost> costs,
                              std::span<const compute::Hardware> hardware,
                              const FairnessState& fairness, const SkipWeights& weights,
                              std::size_t round, std::optional<std::size_t> master) {
  if (members.empty()) throw std::invalid_argument("select_participants: empty cluster");
  for (std::size_t id : members) {
    if (id >= costs.size() || id >= hardware.size() || id >= fairness.cooldown.size()) {
      throw std::invalid_argument("select_participants: missing cost or fairness entry for satellite " +
                                  std::to_string(id));
    }
  }
  Selection sel;
  sel.participants.assign(members.begin(), members.end());
  std::sort(sel.participants.begin(), sel.participants.end());
  for (std::size_t id : members) sel.barrier_before_s = std::max(sel.barrier_before_s, costs[id].t_train_s);
  sel.barrier_after_s = sel.barrier_before_s;

  std::vector<std::size_t> admissible;
  for (std::size_t id : sel.participants) {
    if (master && id == *master) continue;
    if (fairness.admissible(id)) admissible.push_back(id);
  }
  if (fairness.is_all_participation_round(round)) {
    sel.forced_full = true;
    return sel;
  }
  if (admissible.empty()) return sel;

  double max_dt = 0.0, max_de = 0.0;
  for (std::size_t i : admissible) {
    double without = 0.0;
    for (std::size_t j : members) {
      if (j != i) without = std::max(without, costs[j].t_train_s);
    }
    Candidate c;
    c.id = i;
    c.delta_t_s = sel.barrier_before_s - without;
    c.delta_e_j = costs[i].e_train_j;
    max_dt = std::max(max_dt, c.delta_t_s);
    max_de = std::max(max_de, c.delta_e_j);
    sel.candidates.push_back(c);
  }
  const Candidate* best = nullptr;
  for (Candidate& c : sel.candidates) {
    const double dt = max_dt > 0.0 ? c.delta_t_s / max_dt : 0.0;
    const double de = max_de > 0.0 ? c.delta_e_j / max_de : 0.0;
    c.psi = weights.theta_t * dt + weights.theta_e * de -
            weights.theta_h * weights.hw_penalty[static_cast<std::size_t>(hardware[c.id])] -
            weights.theta_f * fairness.history[c.id];
    if (best == nullptr || c.psi > best->psi) best = &c;  // ids ascending: first max wins
  }
  if (best->psi > 0.0) {
    sel.skipped = best->id;
    sel.delta_t_s = best->delta_t_s;
    sel.delta_e_j = best->delta_e_j;
    sel.psi = best->psi;
    sel.participants.erase(std::find(sel.participants.begin(), sel.participants.end(), best->id));
    sel.barrier_after_s = sel.barrier_before_s - best->delta_t_s;
  }
  return sel;
}

void update_fairness(FairnessState& f, std::span<const std::size_t> skipped,
                     std::span<const std::size_t> participants, std::size_t round) {
  const double decay = f.config.phi_decay;
  for (std::size_t id : skipped) {
    if (std::find(participants.begin(), participants.end(), id) != participants.end()) {
      throw std::invalid_argument("a satellite cannot be both skipped and participating");
    }
    f.cooldown[id] = f.config.cooldown_length;
    ++f.staleness[id];
    f.history[id] = decay * f.history[id];
  }
  for (std::size_t id : participants) {
    f.cooldown[id] = std::max(f.cooldown[id] - 1, 0);
    f.staleness[id] = 0;
    f.history[id] = decay * f.history[id] + (1.0 - decay);
  }
  if (f.is_all_participation_round(round)) {
    for (std::size_t id : participants) f.cooldown[id] = 0;
    for (std::size_t id : skipped) f.cooldown[id] = 0;
  }
}

}  // namespace crosatfl::skipone
