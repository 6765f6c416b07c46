#include <gtest/gtest.h>

#include <algorithm>

#include "crosatfl/rng.hpp"
#include "crosatfl/skipone.hpp"

namespace {

using namespace crosatfl;
using namespace crosatfl::skipone;
using compute::Hardware;
using compute::TrainingCost;

TrainingCost cost(double t, double e = 1.0) {
  TrainingCost c;
  c.t_train_s = t;
  c.t_epoch_s = t / 10.0;
  c.e_train_j = e;
  return c;
}

SkipWeights time_only() {
  SkipWeights w;
  w.theta_t = 1.0;
  w.theta_e = 0.0;
  w.theta_h = 0.0;
  w.theta_f = 0.0;
  return w;
}

TEST(SkipOne, SkipsTheUniqueStraggler) {
  const std::vector<std::size_t> members{0, 1, 2};
  const std::vector<TrainingCost> costs{cost(10), cost(10), cost(30)};
  const std::vector<Hardware> hw(3, Hardware::CPU);
  const auto f = FairnessState::initial(3);
  const auto sel = select_participants(members, costs, hw, f, time_only(), 1);
  ASSERT_TRUE(sel.skipped.has_value());
  EXPECT_EQ(*sel.skipped, 2u);
  EXPECT_DOUBLE_EQ(sel.delta_t_s, 20.0);
  EXPECT_EQ(sel.participants, (std::vector<std::size_t>{0, 1}));
  EXPECT_DOUBLE_EQ(sel.barrier_before_s, 30.0);
  EXPECT_DOUBLE_EQ(sel.barrier_after_s, 10.0);
}

TEST(SkipOne, MasterIsNeverSkipped) {
  const std::vector<std::size_t> members{0, 1, 2};
  const std::vector<TrainingCost> costs{cost(10), cost(10), cost(30)};
  const std::vector<Hardware> hw(3, Hardware::CPU);
  const auto f = FairnessState::initial(3);
  const auto sel = select_participants(members, costs, hw, f, time_only(), 1, 2);
  EXPECT_NE(sel.skipped, std::optional<std::size_t>(2));
  for (const auto& c : sel.candidates) EXPECT_NE(c.id, 2u);
}

TEST(SkipOne, EmptyAdmissibleSetMeansFullCluster) {
  const std::vector<std::size_t> members{0, 1, 2};
  const std::vector<TrainingCost> costs{cost(10), cost(10), cost(30)};
  const std::vector<Hardware> hw(3, Hardware::CPU);
  auto f = FairnessState::initial(3);
  for (auto& k : f.cooldown) k = 1;
  const auto sel = select_participants(members, costs, hw, f, time_only(), 1);
  EXPECT_FALSE(sel.skipped.has_value());
  EXPECT_EQ(sel.participants, members);
}

TEST(SkipOne, EqualTimesNoGainNoSkip) {
  const std::vector<std::size_t> members{0, 1, 2, 3};
  const std::vector<TrainingCost> costs(4, cost(12.0, 3.0));
  const std::vector<Hardware> hw{Hardware::CPU, Hardware::GPU, Hardware::CPU, Hardware::GPU};
  auto f = FairnessState::initial(4);
  SkipWeights w;
  w.theta_e = 0.0;
  w.theta_h = 0.3;
  w.theta_f = 0.2;
  const auto sel = select_participants(members, costs, hw, f, w, 1);
  for (const auto& c : sel.candidates) {
    EXPECT_EQ(c.delta_t_s, 0.0);
    EXPECT_LE(c.psi, 0.0);
  }
  EXPECT_FALSE(sel.skipped.has_value());
}

TEST(SkipOne, AllParticipationRoundIsForcedFull) {
  const std::vector<std::size_t> members{0, 1, 2};
  const std::vector<TrainingCost> costs{cost(10), cost(10), cost(30)};
  const std::vector<Hardware> hw(3, Hardware::CPU);
  const auto f = FairnessState::initial(3);
  const auto sel = select_participants(members, costs, hw, f, time_only(), 10);
  EXPECT_TRUE(sel.forced_full);
  EXPECT_FALSE(sel.skipped.has_value());
}

TEST(Fairness, CooldownBlocksNextRound) {
  const std::vector<std::size_t> members{0, 1, 2};
  const std::vector<TrainingCost> costs{cost(10), cost(10), cost(30)};
  const std::vector<Hardware> hw(3, Hardware::CPU);
  auto f = FairnessState::initial(3);
  const auto r1 = select_participants(members, costs, hw, f, time_only(), 1);
  const std::vector<std::size_t> skipped{*r1.skipped};
  update_fairness(f, skipped, r1.participants, 1);
  EXPECT_GT(f.cooldown[2], 0);
  EXPECT_FALSE(f.admissible(2));
  const auto r2 = select_participants(members, costs, hw, f, time_only(), 2);
  EXPECT_NE(r2.skipped, std::optional<std::size_t>(2));
}

TEST(Fairness, ParticipantsStayFresh) {
  auto f = FairnessState::initial(2);
  const std::vector<std::size_t> all{0, 1};
  for (std::size_t r = 1; r <= 25; ++r) {
    update_fairness(f, {}, all, r);
    EXPECT_EQ(f.staleness[0], 0);
    EXPECT_EQ(f.staleness[1], 0);
  }
  EXPECT_NEAR(f.history[0], 1.0, 1e-6);
}

TEST(Fairness, AllParticipationRoundResetsCooldowns) {
  auto f = FairnessState::initial(3);
  const std::vector<std::size_t> skip{2}, rest{0, 1};
  update_fairness(f, skip, rest, 9);
  EXPECT_GT(f.cooldown[2], 0);
  const std::vector<std::size_t> all{0, 1, 2};
  update_fairness(f, {}, all, 10);
  for (int k : f.cooldown) EXPECT_EQ(k, 0);
}

TEST(Fairness, OverlapRejected) {
  auto f = FairnessState::initial(2);
  const std::vector<std::size_t> both{0};
  EXPECT_THROW(update_fairness(f, both, both, 1), std::invalid_argument);
}

TEST(Fairness, ConfigValidation) {
  FairnessConfig c;
  c.phi_decay = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = FairnessConfig{};
  c.tau_max = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

// Repeated rounds on random clusters with default weights.
TEST(SkipOne, RandomClusterProperties) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(9);
    std::vector<std::size_t> members(n);
    std::vector<TrainingCost> costs;
    std::vector<Hardware> hw;
    for (std::size_t i = 0; i < n; ++i) {
      members[i] = i;
      costs.push_back(cost(rng.uniform(0.05, 40.0), rng.uniform(0.01, 3.0)));
      hw.push_back(rng.uniform() < 0.5 ? Hardware::CPU : Hardware::GPU);
    }
    auto f = FairnessState::initial(n);
    std::vector<std::size_t> last_in(n, 0);
    std::optional<std::size_t> previous_skip;
    for (std::size_t r = 1; r <= 40; ++r) {
      const auto sel = select_participants(members, costs, hw, f, {}, r);
      EXPECT_LE(sel.barrier_after_s, sel.barrier_before_s);
      EXPECT_EQ(sel.participants.size() + (sel.skipped ? 1u : 0u), n);
      if (sel.skipped) EXPECT_NE(sel.skipped, previous_skip);
      previous_skip = sel.skipped;
      std::vector<std::size_t> skipped;
      if (sel.skipped) skipped.push_back(*sel.skipped);
      update_fairness(f, skipped, sel.participants, r);
      for (std::size_t id : sel.participants) last_in[id] = r;
      for (std::size_t id = 0; id < n; ++id) EXPECT_LT(r - last_in[id], 10u);
    }
  }
}

}  // namespace
