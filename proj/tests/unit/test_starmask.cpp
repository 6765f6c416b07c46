#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "crosatfl/rng.hpp"
#include "crosatfl/starmask.hpp"

namespace {

using namespace crosatfl;
using namespace crosatfl::starmask;
using compute::Hardware;
using compute::SatelliteProfile;

SatelliteProfile sat(std::size_t id, Hardware hw, int fan_out, std::int64_t n = 100, double alpha = 1e12) {
  SatelliteProfile p;
  p.id = id;
  p.hardware = hw;
  p.n_samples = n;
  p.fan_out = fan_out;
  p.alpha_flops_per_s = alpha;
  p.p_avg_w = 20.0;
  p.gamma = 1e-28;
  p.cycles_per_sample = 2.5e6;
  p.freq_hz = 1e9;
  return p;
}

Constraints loose(std::size_t k_max = 9, std::size_t m_min = 1) {
  Constraints c;
  c.k_max = k_max;
  c.m_min = m_min;
  return c;
}

RewardWeights unit_weights() {
  RewardWeights w;
  for (auto& r : w.norm_ranges) r = {0.0, 1.0};
  return w;
}

AssignmentState place_all(const Instance& inst, const Constraints& c, std::span<const Action> plan) {
  auto s = AssignmentState::initial(c.k_max);
  for (Action a : plan) apply_action(s, inst, c, a);
  return s;
}

TEST(Masking, OpenNewDisappearsAtKMax) {
  std::vector<SatelliteProfile> ps;
  for (std::size_t i = 0; i < 4; ++i) ps.push_back(sat(i, Hardware::GPU, 6));
  const auto inst = make_instance(ps, 1);
  const auto c = loose(2);
  const std::vector<Action> plan{c.k_max, c.k_max};
  const auto s = place_all(inst, c, plan);
  EXPECT_EQ(s.k_open, 2u);
  const auto acts = feasible_actions(s, inst, c);
  EXPECT_EQ(std::count(acts.begin(), acts.end(), c.k_max), 0);
  EXPECT_EQ(acts.size(), 2u);
}

TEST(Masking, HomogeneousModeBlocksOtherHardware) {
  std::vector<SatelliteProfile> ps{sat(0, Hardware::CPU, 6), sat(1, Hardware::CPU, 6), sat(2, Hardware::GPU, 6),
                                   sat(3, Hardware::GPU, 6)};
  const auto inst = make_instance(ps, 1);
  auto c = loose(4);
  const std::vector<Action> plan{c.k_max};
  auto s = place_all(inst, c, plan);
  apply_action(s, inst, c, 0);  // cluster 0 = {0, 1}, all CPU
  const auto acts = feasible_actions(s, inst, c);
  EXPECT_EQ(std::count(acts.begin(), acts.end(), Action{0}), 0);
  c.homogeneous = false;
  const auto mixed = feasible_actions(s, inst, c);
  EXPECT_EQ(std::count(mixed.begin(), mixed.end(), Action{0}), 1);
}

TEST(Masking, FullMasterCapacityBlocksJoin) {
  // Fan-out 3 gives c~ = 2: a master can carry at most two members.
  std::vector<SatelliteProfile> ps;
  for (std::size_t i = 0; i < 5; ++i) ps.push_back(sat(i, Hardware::GPU, 3));
  const auto inst = make_instance(ps, 1);
  const auto c = loose(4);
  const std::vector<Action> plan{c.k_max, 0, 0};
  const auto s = place_all(inst, c, plan);
  EXPECT_EQ(s.summaries[0].size, 3u);
  const auto acts = feasible_actions(s, inst, c);
  EXPECT_EQ(std::count(acts.begin(), acts.end(), Action{0}), 0);
  EXPECT_EQ(std::count(acts.begin(), acts.end(), c.k_max), 1);
}

TEST(Reward, TermsOnHandBuiltPartitions) {
  // Per-epoch times 2 s and 5 s: 200 samples x 1e7 FLOP at 1e9 and 4e8 FLOP/s.
  std::vector<SatelliteProfile> ps{sat(0, Hardware::GPU, 6, 200, 1e9), sat(1, Hardware::GPU, 6, 200, 4e8),
                                   sat(2, Hardware::GPU, 6, 200, 1e9), sat(3, Hardware::GPU, 6, 200, 1e9)};
  const auto inst = make_instance(ps, 1);
  ClusterPartition p{{{0, 1}, {2, 3}}, {0, 2}};
  EXPECT_DOUBLE_EQ(waiting_mismatch(p, inst), 3.0);
  EXPECT_EQ(mixed_clusters(p, inst), 0u);
  EXPECT_DOUBLE_EQ(share_variance(p, inst), 0.0);

  ps[3].hardware = Hardware::CPU;
  const auto inst2 = make_instance(ps, 1);
  EXPECT_EQ(mixed_clusters(p, inst2), 1u);
}

TEST(Reward, BreakdownRecombines) {
  Rng rng(5);
  const auto ps = compute::sample_profiles(14, 0.5, 21);
  const auto inst = make_instance(ps, 10);
  auto c = loose(6, 2);
  RewardWeights w;
  w.norm_ranges = estimate_norm_ranges(std::span(&inst, 1), c, {}, 30, 3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto r = random_feasible_partition(inst, c, rng);
    const auto& p = std::get<ClusterPartition>(r);
    const auto b = terminal_reward(p, inst, w, {});
    double sum = 0.0;
    for (std::size_t t = 0; t < kRewardTerms; ++t) {
      EXPECT_DOUBLE_EQ(b.weighted[t], w.weight(static_cast<RewardTerm>(t)) * b.normalized[t]);
      sum += b.weighted[t];
    }
    EXPECT_NEAR(b.reward, -sum, 1e-12);
  }
}

TEST(Reward, EnergyCountsOneEpochPlusNonMasterUploads) {
  std::vector<SatelliteProfile> ps{sat(0, Hardware::GPU, 6), sat(1, Hardware::GPU, 6), sat(2, Hardware::GPU, 6)};
  const auto inst = make_instance(ps, 5);
  const ClusterPartition p{{{0, 1, 2}}, {0}};
  RewardContext ctx;
  const double upload = ctx.model_bits / ctx.link.lisl_rate_bps * ctx.link.p_lisl_w +
                        ctx.link.lisl_latency_s * ctx.link.p_lisl_w;
  double train = 0.0;
  for (const auto& cost : inst.costs) train += cost.e_train_j / 5.0;
  EXPECT_NEAR(total_energy(p, inst, ctx), train + 2.0 * upload, 1e-9);
}

TEST(Fallback, AllCapacityZeroIsInfeasible) {
  std::vector<SatelliteProfile> ps;
  for (std::size_t i = 0; i < 5; ++i) ps.push_back(sat(i, Hardware::GPU, 1));
  const auto inst = make_instance(ps, 1);
  const auto r = greedy_fallback(inst, loose(9, 2));
  ASSERT_TRUE(std::holds_alternative<Infeasible>(r));
  EXPECT_GE(std::get<Infeasible>(r).k_min, 1u);
  EXPECT_FALSE(std::get<Infeasible>(r).reason.empty());

  const auto bf = brute_force_partition(inst, loose(9, 2), unit_weights(), {});
  EXPECT_TRUE(std::holds_alternative<Infeasible>(bf));

  const auto built = construct(inst, loose(9, 2), [](const AssignmentState&, std::span<const Action> a) {
    return a.front();
  });
  EXPECT_TRUE(std::holds_alternative<Infeasible>(built.result));
}

TEST(Fallback, FourIdenticalSatellites) {
  std::vector<SatelliteProfile> ps;
  for (std::size_t i = 0; i < 4; ++i) ps.push_back(sat(i, Hardware::GPU, 4));
  const auto inst = make_instance(ps, 1);
  const auto c = loose(2, 2);
  const auto r = greedy_fallback(inst, c);
  ASSERT_TRUE(std::holds_alternative<ClusterPartition>(r));
  const auto& p = std::get<ClusterPartition>(r);
  EXPECT_GE(p.k(), 1u);
  EXPECT_LE(p.k(), 2u);
  EXPECT_EQ(constraint_violation(p, inst, c), "");
}

TEST(Fallback, TargetCountIsHonoredWhenFeasible) {
  const auto inst = make_instance(compute::sample_profiles(40, 0.5, 1), 10);
  Constraints c = loose(9, 2);
  c.k_target = 9;
  const auto r = greedy_fallback(inst, c);
  ASSERT_TRUE(std::holds_alternative<ClusterPartition>(r));
  EXPECT_EQ(std::get<ClusterPartition>(r).k(), 9u);
  EXPECT_EQ(constraint_violation(std::get<ClusterPartition>(r), inst, c), "");
}

TEST(Fallback, InvariantCleanOnRandomInstances) {
  Rng rng(2024);
  std::size_t feasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.below(19);
    const double cpu = rng.uniform(0.0, 1.0);
    const auto inst = make_instance(compute::sample_profiles(n, cpu, rng.next_u64()), 10);
    Constraints c = loose(1 + rng.below(9), 1 + rng.below(3));
    c.homogeneous = rng.uniform(0.0, 1.0) < 0.7;
    const auto r = greedy_fallback(inst, c);
    if (const auto* p = std::get_if<ClusterPartition>(&r)) {
      ++feasible;
      EXPECT_EQ(constraint_violation(*p, inst, c), "") << "trial " << trial;
    }
  }
  EXPECT_GT(feasible, 100u);
}

TEST(BruteForce, TwoSatellitesPicksBetterReward) {
  std::vector<SatelliteProfile> ps{sat(0, Hardware::GPU, 4, 100, 1e12), sat(1, Hardware::GPU, 4, 300, 2e12)};
  const auto inst = make_instance(ps, 1);
  const auto c = loose(2, 1);
  const auto w = unit_weights();
  const auto r = brute_force_partition(inst, c, w, {});
  ASSERT_TRUE(std::holds_alternative<BruteForceResult>(r));
  const auto& best = std::get<BruteForceResult>(r);
  const double together = terminal_reward({{{0, 1}}, {0}}, inst, w, {}).reward;
  const double apart = terminal_reward({{{0}, {1}}, {0, 1}}, inst, w, {}).reward;
  EXPECT_EQ(best.feasible_count, 2u);
  EXPECT_DOUBLE_EQ(best.best_reward.reward, std::max(together, apart));
  EXPECT_DOUBLE_EQ(best.worst_reward, std::min(together, apart));
}

TEST(BruteForce, SymmetricInstanceTieBreaks) {
  std::vector<SatelliteProfile> ps;
  for (std::size_t i = 0; i < 4; ++i) ps.push_back(sat(i, Hardware::GPU, 4));
  const auto inst = make_instance(ps, 1);
  RewardWeights w = unit_weights();
  w.nu_count = 0.0;
  w.beta = 0.0;
  const auto r = brute_force_partition(inst, loose(2, 2), w, {});
  ASSERT_TRUE(std::holds_alternative<BruteForceResult>(r));
  const auto& best = std::get<BruteForceResult>(r).best;
  // Every feasible partition ties; fewest clusters wins.
  ASSERT_EQ(best.k(), 1u);
  EXPECT_EQ(best.clusters[0], (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(BruteForce, FallbackNeverBeatsOptimum) {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + rng.below(5);
    const auto inst = make_instance(compute::sample_profiles(n, 0.5, rng.next_u64()), 10);
    const auto c = loose(3, 1);
    RewardWeights w;
    w.norm_ranges = estimate_norm_ranges(std::span(&inst, 1), c, {}, 20, 9);
    const auto g = greedy_fallback(inst, c);
    const auto bf = brute_force_partition(inst, c, w, {});
    ASSERT_EQ(std::holds_alternative<ClusterPartition>(g), std::holds_alternative<BruteForceResult>(bf));
    if (const auto* p = std::get_if<ClusterPartition>(&g)) {
      const double rg = terminal_reward(*p, inst, w, {}).reward;
      EXPECT_LE(rg, std::get<BruteForceResult>(bf).best_reward.reward + 1e-12);
    }
  }
}

TEST(Construct, RandomChooserAlwaysValid) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = make_instance(compute::sample_profiles(12, 0.5, rng.next_u64()), 10);
    const auto c = loose(9, 2);
    const auto built = construct(inst, c, [&](const AssignmentState& s, std::span<const Action> a) {
      EXPECT_EQ(feasible_actions(s, inst, c), std::vector<Action>(a.begin(), a.end()));
      return a[rng.below(a.size())];
    });
    if (const auto* p = std::get_if<ClusterPartition>(&built.result)) {
      EXPECT_EQ(constraint_violation(*p, inst, c), "");
    }
  }
}

TEST(Constraints, Validation) {
  Constraints c;
  c.k_max = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = Constraints{};
  c.m_min = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

}  // namespace
