#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "crosatfl/policy.hpp"
#include "crosatfl/rng.hpp"

namespace {

using namespace crosatfl;
using namespace crosatfl::starmask;

Constraints constraints() {
  Constraints c;
  c.k_max = 5;
  c.m_min = 2;
  return c;
}

std::vector<Instance> family(std::size_t count, std::uint64_t seed) {
  std::vector<Instance> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(make_instance(compute::sample_profiles(12, 0.5, derive_seed(seed, "instance", i)), 10));
  }
  return out;
}

// State partway through a random construction, so several clusters are open.
AssignmentState midway(const Instance& inst, const Constraints& c, std::size_t steps, Rng& rng) {
  auto s = AssignmentState::initial(c.k_max);
  for (std::size_t i = 0; i < steps; ++i) {
    const auto a = feasible_actions(s, inst, c);
    apply_action(s, inst, c, a[rng.below(a.size())]);
  }
  return s;
}

TEST(Policy, ObservationShape) {
  const auto inst = family(1, 1).front();
  const auto c = constraints();
  const auto obs = observe(AssignmentState::initial(c.k_max), inst, c);
  EXPECT_EQ(obs.sat.size(), kSatFeatures);
  EXPECT_EQ(obs.clusters.size(), c.k_max);
  for (const auto& row : obs.clusters) EXPECT_EQ(row.size(), kClusterFeatures);
  EXPECT_EQ(obs.global.size(), kGlobalFeatures);
}

TEST(Policy, ProbabilitiesLiveOnFeasibleSet) {
  const auto c = constraints();
  const MaskedPolicy pol({c.k_max, 8, 16}, 4);
  Rng rng(9);
  for (const auto& inst : family(20, 3)) {
    const auto s = midway(inst, c, 6, rng);
    const auto feasible = feasible_actions(s, inst, c);
    const auto probs = pol.probabilities(observe(s, inst, c), feasible);
    ASSERT_EQ(probs.size(), c.k_max + 1);
    double total = 0.0;
    for (std::size_t a = 0; a < probs.size(); ++a) {
      const bool allowed = std::find(feasible.begin(), feasible.end(), a) != feasible.end();
      if (!allowed) EXPECT_EQ(probs[a], 0.0);
      total += probs[a];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Policy, GradientMatchesFiniteDifferences) {
  const auto c = constraints();
  MaskedPolicy pol({c.k_max, 4, 6}, 11);
  Rng rng(2);
  const auto inst = family(1, 5).front();
  const auto s = midway(inst, c, 5, rng);
  const auto obs = observe(s, inst, c);
  const auto feasible = feasible_actions(s, inst, c);
  ASSERT_GE(feasible.size(), 2u);
  const Action action = feasible[1];
  const double adv = 0.7, target = -0.3, ent = 0.05, vc = 0.5;

  std::vector<double> grad(pol.parameter_count(), 0.0);
  pol.accumulate_gradient(obs, feasible, action, adv, target, ent, vc, grad);
  std::vector<double> scratch(pol.parameter_count(), 0.0);
  auto loss = [&] {
    std::fill(scratch.begin(), scratch.end(), 0.0);
    return pol.accumulate_gradient(obs, feasible, action, adv, target, ent, vc, scratch);
  };
  const double h = 1e-6;
  auto params = pol.parameters();
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    const double up = loss();
    params[i] = keep - h;
    const double down = loss();
    params[i] = keep;
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - grad[i]) / std::max(1.0, std::abs(fd)));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Policy, ZeroEpisodesReturnsInitialization) {
  const auto c = constraints();
  const auto inst = family(3, 8);
  TrainHyper hyper;
  hyper.episodes = 0;
  hyper.seed = 42;
  RewardWeights w;
  const auto r = train_policy(inst, c, w, {}, hyper, {c.k_max, 8, 16});
  const MaskedPolicy init({c.k_max, 8, 16}, hyper.seed);
  ASSERT_EQ(r.policy.parameter_count(), init.parameter_count());
  for (std::size_t i = 0; i < init.parameter_count(); ++i) {
    EXPECT_EQ(r.policy.parameters()[i], init.parameters()[i]);
  }
  EXPECT_TRUE(r.rewards.empty());
}

TEST(Policy, TrainingIsDeterministicAndImproves) {
  const auto c = constraints();
  const auto inst = family(20, 13);
  RewardWeights w;
  w.norm_ranges = estimate_norm_ranges(inst, c, {}, 50, 1);
  TrainHyper hyper;
  hyper.episodes = 600;
  hyper.seed = 3;
  const auto a = train_policy(inst, c, w, {}, hyper, {c.k_max, 8, 16});
  const auto b = train_policy(inst, c, w, {}, hyper, {c.k_max, 8, 16});
  ASSERT_EQ(a.rewards, b.rewards);
  ASSERT_EQ(a.rewards.size(), 600u);
  ASSERT_EQ(a.moving_average.size(), 600u);
  double early = 0.0, late = 0.0;
  for (std::size_t i = 0; i < 60; ++i) {
    early += a.rewards[i];
    late += a.rewards[540 + i];
  }
  EXPECT_GE(late, early);
}

TEST(Policy, SampledDecisionsAreNeverMasked) {
  const auto c = constraints();
  const auto inst = family(10, 17);
  const MaskedPolicy pol({c.k_max, 8, 16}, 6);
  Rng rng(1);
  std::size_t decisions = 0;
  for (int round = 0; decisions < 2000; ++round) {
    const auto& one = inst[static_cast<std::size_t>(round) % inst.size()];
    auto s = AssignmentState::initial(c.k_max);
    while (!s.done(one)) {
      const auto feasible = feasible_actions(s, one, c);
      if (feasible.empty()) break;
      const auto probs = pol.probabilities(observe(s, one, c), feasible);
      double u = rng.uniform(), acc = 0.0;
      Action pick = feasible.back();
      for (std::size_t a = 0; a < probs.size(); ++a) {
        acc += probs[a];
        if (u < acc) {
          pick = a;
          break;
        }
      }
      ASSERT_NE(std::find(feasible.begin(), feasible.end(), pick), feasible.end());
      apply_action(s, one, c, pick);
      ++decisions;
    }
  }
}

TEST(Policy, SaveLoadRoundTrip) {
  const auto c = constraints();
  PolicyFile file{MaskedPolicy({c.k_max, 8, 16}, 21), {}, {}};
  file.hyper.episodes = 77;
  file.weights.norm_ranges[kWait] = {0.25, 3.5};
  std::stringstream buf;
  save_policy(buf, file);
  const auto back = load_policy(buf);
  EXPECT_EQ(back.hyper.episodes, 77u);
  EXPECT_EQ(back.weights.norm_ranges[kWait].max, 3.5);
  ASSERT_EQ(back.policy.parameter_count(), file.policy.parameter_count());
  for (std::size_t i = 0; i < file.policy.parameter_count(); ++i) {
    EXPECT_EQ(back.policy.parameters()[i], file.policy.parameters()[i]);
  }
  std::stringstream bad("not a policy\n");
  EXPECT_THROW(load_policy(bad), std::exception);
}

TEST(Policy, GreedyEpisodeGivesValidPartition) {
  const auto c = constraints();
  const MaskedPolicy pol({c.k_max, 8, 16}, 2);
  for (const auto& inst : family(10, 23)) {
    const auto ep = run_clustering_episode(inst, pol, c, EpisodeMode::Greedy, nullptr);
    const auto* p = std::get_if<ClusterPartition>(&ep.result);
    ASSERT_NE(p, nullptr);
    EXPECT_EQ(constraint_violation(*p, inst, c), "");
  }
}

}  // namespace
