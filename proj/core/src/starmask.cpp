#include "crosatfl/starmask.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "crosatfl/rng.hpp"

namespace crosatfl::starmask {

using compute::Hardware;
using compute::kHardwareKinds;

namespace {

std::size_t hw_index(Hardware hw) { return static_cast<std::size_t>(hw); }

int capacity_of(const Instance& instance, std::size_t i, const Constraints& c) {
  return effective_capacity(instance.profiles[i], c.capacity_limits);
}

// Sizes/kinds of active clusters after a hypothetical placement must leave
// enough unplaced satellites to bring every cluster up to m_min. Counting
// only; an exact look-ahead is exponential.
bool reachable_after(const AssignmentState& state, const Instance& instance,
                     const Constraints& c, std::size_t target_cluster, bool open_new) {
  const std::size_t t = state.step;
  const Hardware h_t = instance.profiles[t].hardware;
  std::array<std::size_t, kHardwareKinds> remaining{};
  for (std::size_t i = t + 1; i < instance.size(); ++i) {
    ++remaining[hw_index(instance.profiles[i].hardware)];
  }
  std::array<std::size_t, kHardwareKinds> deficit{};
  std::array<bool, kHardwareKinds> has_cluster{};
  auto add_deficit = [&](std::size_t size, std::size_t kind) {
    if (size < c.m_min) deficit[kind] += c.m_min - size;
    has_cluster[kind] = true;
  };
  for (std::size_t k = 0; k < state.k_open; ++k) {
    const ClusterSummary& s = state.summaries[k];
    std::size_t size = s.size;
    std::size_t kind = s.hw_counts[hw_index(Hardware::CPU)] > 0 ? hw_index(Hardware::CPU)
                                                                  : hw_index(Hardware::GPU);
    if (!open_new && k == target_cluster) {
      ++size;
      kind = hw_index(h_t);
    }
    add_deficit(size, kind);
  }
  std::size_t k_open = state.k_open;
  if (open_new) {
    add_deficit(1, hw_index(h_t));
    ++k_open;
  }
  if (c.homogeneous) {
    std::size_t kinds_needing_cluster = 0;
    for (std::size_t h = 0; h < kHardwareKinds; ++h) {
      if (deficit[h] > remaining[h]) return false;
      if (remaining[h] > 0 && !has_cluster[h]) ++kinds_needing_cluster;
    }
    return kinds_needing_cluster <= c.k_max - k_open;
  }
  const std::size_t total_deficit = deficit[0] + deficit[1];
  return total_deficit <= remaining[0] + remaining[1];
}

struct PoolRange {
  std::size_t lo = 0;
  std::size_t hi = 0;
};

// Feasible cluster counts for one pool: K masters taken from the top
// capacities must cover everyone (sum of 1 + c~ >= n), each must be able to
// host m_min members, and K * m_min <= n. The feasible counts form an
// interval.
std::optional<PoolRange> pool_range(const std::vector<int>& caps_desc, std::size_t m_min) {
  const std::size_t n = caps_desc.size();
  std::optional<std::size_t> lo, hi;
  long long covered = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    covered += 1 + caps_desc[k - 1];
    const bool ok = k * m_min <= n && caps_desc[k - 1] >= static_cast<int>(m_min) - 1 &&
                    covered >= static_cast<long long>(n);
    if (ok) {
      if (!lo) lo = k;
      hi = k;
    }
  }
  if (!lo) return std::nullopt;
  return PoolRange{*lo, *hi};
}

std::size_t pool_capacity_bound(const std::vector<int>& caps_desc) {
  long long covered = 0;
  for (std::size_t k = 1; k <= caps_desc.size(); ++k) {
    covered += 1 + caps_desc[k - 1];
    if (covered >= static_cast<long long>(caps_desc.size())) return k;
  }
  return caps_desc.size();
}

std::vector<std::vector<std::size_t>> pools_of(const Instance& instance, const Constraints& c) {
  std::vector<std::vector<std::size_t>> pools;
  if (c.homogeneous) {
    std::array<std::vector<std::size_t>, kHardwareKinds> by_kind;
    for (std::size_t i = 0; i < instance.size(); ++i) {
      by_kind[hw_index(instance.profiles[i].hardware)].push_back(i);
    }
    for (auto& p : by_kind) {
      if (!p.empty()) pools.push_back(std::move(p));
    }
  } else {
    pools.emplace_back(instance.size());
    std::iota(pools.back().begin(), pools.back().end(), std::size_t{0});
  }
  return pools;
}

std::vector<int> caps_desc(const Instance& instance, const std::vector<std::size_t>& pool,
                           const Constraints& c) {
  std::vector<int> caps;
  caps.reserve(pool.size());
  for (std::size_t i : pool) caps.push_back(capacity_of(instance, i, c));
  std::sort(caps.begin(), caps.end(), std::greater<>());
  return caps;
}

void build_pool(const Instance& instance, const Constraints& c, const std::vector<std::size_t>& pool,
                std::size_t k, std::vector<std::vector<std::size_t>>& out) {
  std::vector<std::size_t> order = pool;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const int ca = capacity_of(instance, a, c), cb = capacity_of(instance, b, c);
    if (ca != cb) return ca > cb;
    const double ta = instance.costs[a].t_epoch_s, tb = instance.costs[b].t_epoch_s;
    if (ta != tb) return ta < tb;
    return a < b;
  });
  const std::size_t first = out.size();
  std::vector<int> remaining(k);
  for (std::size_t j = 0; j < k; ++j) {
    out.push_back({order[j]});
    remaining[j] = capacity_of(instance, order[j], c);
  }
  std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
  std::sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
    const double ta = instance.costs[a].t_epoch_s, tb = instance.costs[b].t_epoch_s;
    if (ta != tb) return ta > tb;
    return a < b;
  });
  for (std::size_t r = 0; r < rest.size(); ++r) {
    std::size_t deficit = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t size = out[first + j].size();
      if (size < c.m_min) deficit += c.m_min - size;
    }
    const bool must_fill = rest.size() - r <= deficit;
    std::optional<std::size_t> pick;
    for (std::size_t j = 0; j < k; ++j) {
      if (remaining[j] <= 0) continue;
      if (must_fill && out[first + j].size() >= c.m_min) continue;
      if (!pick || remaining[j] > remaining[*pick]) pick = j;
    }
    if (!pick) throw std::logic_error("greedy fallback ran out of capacity");
    out[first + *pick].push_back(rest[r]);
    --remaining[*pick];
  }
}

bool ranges_equal_within(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

void Constraints::validate() const {
  if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
  if (m_min < 1) throw std::invalid_argument("m_min must be >= 1");
  for (int l : capacity_limits) {
    if (l < 0) throw std::invalid_argument("capacity limits must be >= 0");
  }
  if (k_target && (*k_target < 1 || *k_target > k_max)) {
    throw std::invalid_argument("k_target must lie in [1, k_max]");
  }
}

Instance make_instance(std::vector<compute::SatelliteProfile> profiles, int local_epochs) {
  Instance inst;
  inst.local_epochs = local_epochs;
  inst.profiles = std::move(profiles);
  double total = 0.0;
  for (const auto& p : inst.profiles) {
    inst.costs.push_back(compute::training_cost(p, local_epochs));
    total += static_cast<double>(p.n_samples);
  }
  for (const auto& p : inst.profiles) {
    inst.shares.push_back(total > 0.0 ? static_cast<double>(p.n_samples) / total
                                      : 1.0 / static_cast<double>(inst.profiles.size()));
  }
  return inst;
}

AssignmentState AssignmentState::initial(std::size_t k_max) {
  AssignmentState s;
  s.summaries.resize(k_max);
  return s;
}

std::vector<Action> feasible_actions(const AssignmentState& state, const Instance& instance,
                                     const Constraints& c) {
  std::vector<Action> actions;
  if (state.done(instance)) return actions;
  const std::size_t t = state.step;
  const int cap_t = capacity_of(instance, t, c);
  const Hardware h_t = instance.profiles[t].hardware;
  for (std::size_t k = 0; k < state.k_open; ++k) {
    const ClusterSummary& s = state.summaries[k];
    const int cap = std::max(s.max_capacity, cap_t);
    if (static_cast<int>(s.size) > cap) continue;
    if (c.homogeneous && s.hw_counts[hw_index(h_t)] != s.size) continue;
    if (!reachable_after(state, instance, c, k, false)) continue;
    actions.push_back(k);
  }
  if (state.k_open < c.k_max && reachable_after(state, instance, c, 0, true)) {
    actions.push_back(c.k_max);
  }
  return actions;
}

void apply_action(AssignmentState& state, const Instance& instance, const Constraints& c,
                  Action action) {
  const std::size_t t = state.step;
  std::size_t k = action;
  if (action == c.k_max) {
    if (state.k_open >= c.k_max) throw std::invalid_argument("cannot open a cluster beyond k_max");
    k = state.k_open++;
  } else if (action >= state.k_open) {
    throw std::invalid_argument("action refers to an inactive cluster");
  }
  ClusterSummary& s = state.summaries[k];
  const double t_comp = instance.costs[t].t_epoch_s;
  if (s.size == 0) {
    s.t_min_s = s.t_max_s = t_comp;
  } else {
    s.t_min_s = std::min(s.t_min_s, t_comp);
    s.t_max_s = std::max(s.t_max_s, t_comp);
  }
  ++s.size;
  s.energy_sum_j += instance.costs[t].e_train_j;
  s.share_sum += instance.shares[t];
  ++s.hw_counts[hw_index(instance.profiles[t].hardware)];
  s.max_capacity = std::max(s.max_capacity, capacity_of(instance, t, c));
  s.remaining_capacity = s.max_capacity - static_cast<int>(s.size - 1);
  s.active = true;
  state.assignment.push_back(k);
  ++state.step;
}

ClusterPartition partition_from_state(const AssignmentState& state, const Instance& instance,
                                      const Constraints& c) {
  ClusterPartition p;
  p.clusters.resize(state.k_open);
  for (std::size_t i = 0; i < state.assignment.size(); ++i) p.clusters[state.assignment[i]].push_back(i);
  for (const auto& members : p.clusters) {
    p.masters.push_back(engine::master_selection(members, instance.profiles, c.capacity_limits));
  }
  return p;
}

ClusterPartition canonical(ClusterPartition partition, const Instance& instance,
                           const Constraints& c) {
  for (auto& members : partition.clusters) std::sort(members.begin(), members.end());
  std::sort(partition.clusters.begin(), partition.clusters.end());
  partition.masters.clear();
  for (const auto& members : partition.clusters) {
    partition.masters.push_back(engine::master_selection(members, instance.profiles, c.capacity_limits));
  }
  return partition;
}

std::string partition_violation(const ClusterPartition& p, const Instance& instance,
                                const Constraints& c) {
  if (p.masters.size() != p.clusters.size()) return "master count differs from cluster count";
  std::vector<int> seen(instance.size(), 0);
  for (std::size_t k = 0; k < p.clusters.size(); ++k) {
    const auto& members = p.clusters[k];
    for (std::size_t i : members) {
      if (i >= instance.size()) return "member index out of range";
      if (seen[i]++) return "satellite " + std::to_string(i) + " appears in more than one cluster";
    }
    if (std::find(members.begin(), members.end(), p.masters[k]) == members.end()) {
      return "master of cluster " + std::to_string(k) + " is not a member";
    }
    if (members.size() < c.m_min) return "cluster " + std::to_string(k) + " is below m_min";
    int max_cap = 0;
    for (std::size_t i : members) max_cap = std::max(max_cap, capacity_of(instance, i, c));
    if (static_cast<int>(members.size()) - 1 > max_cap) {
      return "cluster " + std::to_string(k) + " exceeds master capacity";
    }
  }
  for (std::size_t i = 0; i < instance.size(); ++i) {
    if (!seen[i]) return "satellite " + std::to_string(i) + " is unassigned";
  }
  return {};
}

std::string constraint_violation(const ClusterPartition& p, const Instance& instance,
                                 const Constraints& c) {
  std::string v = partition_violation(p, instance, c);
  if (!v.empty()) return v;
  if (p.k() > c.k_max) return "more than k_max clusters";
  if (c.homogeneous && mixed_clusters(p, instance) > 0) return "mixed-hardware cluster in homogeneous mode";
  return {};
}

void RewardWeights::validate() const {
  for (double w : {theta_wait, beta, gamma, nu_count, lambda_mix}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("reward weights must be >= 0");
  }
  for (const auto& r : norm_ranges) {
    if (!(r.max > r.min)) throw std::invalid_argument("every reward normalization range needs max > min");
  }
}

double RewardWeights::weight(RewardTerm term) const {
  switch (term) {
    case kWait: return theta_wait;
    case kEnergy: return beta;
    case kShareVar: return gamma;
    case kCount: return nu_count;
    case kMix: return lambda_mix;
    default: break;
  }
  throw std::out_of_range("reward term");
}

double waiting_mismatch(const ClusterPartition& p, const Instance& instance) {
  double w = 0.0;
  for (const auto& members : p.clusters) {
    if (members.empty()) continue;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i : members) {
      lo = std::min(lo, instance.costs[i].t_epoch_s);
      hi = std::max(hi, instance.costs[i].t_epoch_s);
    }
    w += hi - lo;
  }
  return w;
}

double total_energy(const ClusterPartition& p, const Instance& instance, const RewardContext& ctx) {
  const double upload_j = links::link_energy(
      links::link_delay(ctx.model_bits, links::LinkKind::IntraClusterLISL, ctx.link, true),
      links::LinkKind::IntraClusterLISL, ctx.link);
  double e = 0.0;
  for (std::size_t k = 0; k < p.clusters.size(); ++k) {
    for (std::size_t i : p.clusters[k]) {
      e += instance.costs[i].e_train_j / static_cast<double>(instance.local_epochs);
      if (i != p.masters[k]) e += upload_j;
    }
  }
  return e;
}

double share_variance(const ClusterPartition& p, const Instance& instance) {
  const std::size_t k = p.clusters.size();
  if (k == 0) return 0.0;
  std::vector<double> shares;
  for (const auto& members : p.clusters) {
    double s = 0.0;
    for (std::size_t i : members) s += instance.shares[i];
    shares.push_back(s);
  }
  const double mean = std::accumulate(shares.begin(), shares.end(), 0.0) / static_cast<double>(k);
  double var = 0.0;
  for (double s : shares) var += (s - mean) * (s - mean);
  return var / static_cast<double>(k);
}

std::size_t mixed_clusters(const ClusterPartition& p, const Instance& instance) {
  std::size_t mixed = 0;
  for (const auto& members : p.clusters) {
    for (std::size_t i : members) {
      if (instance.profiles[i].hardware != instance.profiles[members.front()].hardware) {
        ++mixed;
        break;
      }
    }
  }
  return mixed;
}

RewardBreakdown terminal_reward(const ClusterPartition& p, const Instance& instance,
                                const RewardWeights& weights, const RewardContext& ctx) {
  RewardBreakdown b;
  b.raw[kWait] = waiting_mismatch(p, instance);
  b.raw[kEnergy] = total_energy(p, instance, ctx);
  b.raw[kShareVar] = share_variance(p, instance);
  b.raw[kCount] = static_cast<double>(p.k());
  b.raw[kMix] = static_cast<double>(mixed_clusters(p, instance));
  double sum = 0.0;
  for (std::size_t t = 0; t < kRewardTerms; ++t) {
    const NormRange& r = weights.norm_ranges[t];
    b.normalized[t] = (b.raw[t] - r.min) / (r.max - r.min);
    b.weighted[t] = weights.weight(static_cast<RewardTerm>(t)) * b.normalized[t];
    sum += b.weighted[t];
  }
  b.reward = -sum;
  return b;
}

std::size_t capacity_lower_bound(const Instance& instance, const Constraints& c) {
  std::size_t k = 0;
  for (const auto& pool : pools_of(instance, c)) k += pool_capacity_bound(caps_desc(instance, pool, c));
  return k;
}

ClusteringResult greedy_fallback(const Instance& instance, const Constraints& c) {
  c.validate();
  const std::size_t k_min = capacity_lower_bound(instance, c);
  if (instance.size() == 0) return Infeasible{0, "no satellites"};
  const auto pools = pools_of(instance, c);
  std::vector<PoolRange> ranges;
  std::size_t lo_sum = 0, hi_sum = 0;
  for (const auto& pool : pools) {
    auto r = pool_range(caps_desc(instance, pool, c), c.m_min);
    if (!r) {
      return Infeasible{k_min, "no cluster count satisfies capacity and minimum size for a "
                               "satellite pool of size " + std::to_string(pool.size())};
    }
    ranges.push_back(*r);
    lo_sum += r->lo;
    hi_sum += r->hi;
  }
  if (lo_sum > c.k_max) {
    return Infeasible{k_min, "smallest feasible cluster count " + std::to_string(lo_sum) +
                                 " exceeds k_max " + std::to_string(c.k_max)};
  }
  const std::size_t k_star =
      c.k_target ? std::clamp(*c.k_target, lo_sum, std::min(hi_sum, c.k_max)) : lo_sum;
  std::vector<std::size_t> per_pool;
  for (const auto& r : ranges) per_pool.push_back(r.lo);
  for (std::size_t total = lo_sum; total < k_star; ++total) {
    std::optional<std::size_t> pick;
    double best_load = -1.0;
    for (std::size_t p = 0; p < pools.size(); ++p) {
      if (per_pool[p] >= ranges[p].hi) continue;
      const double load = static_cast<double>(pools[p].size()) / static_cast<double>(per_pool[p]);
      if (load > best_load) {
        best_load = load;
        pick = p;
      }
    }
    if (!pick) break;
    ++per_pool[*pick];
  }
  ClusterPartition partition;
  for (std::size_t p = 0; p < pools.size(); ++p) build_pool(instance, c, pools[p], per_pool[p], partition.clusters);
  for (const auto& members : partition.clusters) {
    partition.masters.push_back(engine::master_selection(members, instance.profiles, c.capacity_limits));
  }
  return partition;
}

Construction construct(const Instance& instance, const Constraints& c, const ActionChooser& choose) {
  if (instance.size() == 0) throw std::invalid_argument("clustering needs at least one satellite");
  AssignmentState state = AssignmentState::initial(c.k_max);
  while (!state.done(instance)) {
    const auto actions = feasible_actions(state, instance, c);
    if (actions.empty()) return {greedy_fallback(instance, c), true};
    const Action a = choose(state, actions);
    if (std::find(actions.begin(), actions.end(), a) == actions.end()) {
      throw std::logic_error("chooser selected a masked action");
    }
    apply_action(state, instance, c, a);
  }
  ClusterPartition p = partition_from_state(state, instance, c);
  if (!constraint_violation(p, instance, c).empty()) return {greedy_fallback(instance, c), true};
  return {std::move(p), false};
}

ClusteringResult random_feasible_partition(const Instance& instance, const Constraints& c, Rng& rng) {
  return construct(instance, c,
                   [&rng](const AssignmentState&, std::span<const Action> actions) {
                     return actions[rng.below(actions.size())];
                   })
      .result;
}

std::array<NormRange, kRewardTerms> estimate_norm_ranges(std::span<const Instance> instances,
                                                         const Constraints& c,
                                                         const RewardContext& ctx,
                                                         std::size_t samples_per_instance,
                                                         std::uint64_t seed) {
  std::array<NormRange, kRewardTerms> ranges;
  std::array<bool, kRewardTerms> seen{};
  RewardWeights probe;
  for (std::size_t n = 0; n < instances.size(); ++n) {
    Rng rng(derive_seed(seed, "norm-ranges", n));
    for (std::size_t s = 0; s < samples_per_instance; ++s) {
      auto result = random_feasible_partition(instances[n], c, rng);
      const auto* p = std::get_if<ClusterPartition>(&result);
      if (!p) continue;
      const auto b = terminal_reward(*p, instances[n], probe, ctx);
      for (std::size_t t = 0; t < kRewardTerms; ++t) {
        if (!seen[t]) {
          ranges[t] = {b.raw[t], b.raw[t]};
          seen[t] = true;
        } else {
          ranges[t].min = std::min(ranges[t].min, b.raw[t]);
          ranges[t].max = std::max(ranges[t].max, b.raw[t]);
        }
      }
    }
  }
  for (auto& r : ranges) {
    if (ranges_equal_within(r.min, r.max)) r.max = r.min + 1.0;
  }
  return ranges;
}

std::variant<BruteForceResult, Infeasible> brute_force_partition(const Instance& instance,
                                                                 const Constraints& c,
                                                                 const RewardWeights& weights,
                                                                 const RewardContext& ctx) {
  const std::size_t n = instance.size();
  if (n == 0 || n > kBruteForceMaxN) throw std::invalid_argument("brute force needs 1 <= N <= 8");
  std::optional<BruteForceResult> found;
  std::vector<std::size_t> labels(n, 0);

  auto consider = [&](std::size_t blocks) {
    ClusterPartition p;
    p.clusters.resize(blocks);
    for (std::size_t i = 0; i < n; ++i) p.clusters[labels[i]].push_back(i);
    p = canonical(std::move(p), instance, c);
    if (!constraint_violation(p, instance, c).empty()) return;
    const RewardBreakdown r = terminal_reward(p, instance, weights, ctx);
    if (!found) {
      found = BruteForceResult{p, r, r.reward, 1};
      return;
    }
    ++found->feasible_count;
    found->worst_reward = std::min(found->worst_reward, r.reward);
    const double best = found->best_reward.reward;
    bool better;
    if (ranges_equal_within(r.reward, best)) {
      better = p.k() != found->best.k() ? p.k() < found->best.k() : p.clusters < found->best.clusters;
    } else {
      better = r.reward > best;
    }
    if (better) {
      found->best = p;
      found->best_reward = r;
    }
  };

  // Restricted growth strings enumerate each set partition once.
  auto recurse = [&](auto&& self, std::size_t i, std::size_t blocks) -> void {
    if (i == n) {
      consider(blocks);
      return;
    }
    for (std::size_t b = 0; b <= blocks && b < c.k_max; ++b) {
      labels[i] = b;
      self(self, i + 1, std::max(blocks, b + 1));
    }
  };
  labels[0] = 0;
  recurse(recurse, 1, 1);

  if (!found) return Infeasible{capacity_lower_bound(instance, c), "no partition satisfies the constraints"};
  return *found;
}

}  // namespace crosatfl::starmask
