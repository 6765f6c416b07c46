#include <gtest/gtest.h>

#include <algorithm>

#include "crosatfl/compute.hpp"
#include "crosatfl/master_selection.hpp"

namespace {

using namespace crosatfl;
using namespace crosatfl::compute;

SatelliteProfile cpu_profile() {
  SatelliteProfile p;
  p.hardware = Hardware::CPU;
  p.n_samples = 100;
  p.gamma = 1e-28;
  p.cycles_per_sample = 1e6;
  p.freq_hz = 1e9;
  p.alpha_flops_per_s = 4e9;
  p.fan_out = 4;
  return p;
}

SatelliteProfile gpu_profile() {
  SatelliteProfile p;
  p.hardware = Hardware::GPU;
  p.n_samples = 1000;
  p.c_flop = 1e7;
  p.alpha_flops_per_s = 1e12;
  p.p_avg_w = 50.0;
  p.fan_out = 6;
  return p;
}

TEST(TrainingCost, CpuEnergyIsGammaCyclesSamplesFreqSquared) {
  const auto c = training_cost(cpu_profile(), 10);
  EXPECT_EQ(c.total_samples, 1000);
  EXPECT_NEAR(c.e_train_j, 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(c.t_epoch_s, 100 * 1e7 / 4e9);
  EXPECT_DOUBLE_EQ(c.t_train_s, 10 * c.t_epoch_s);
}

TEST(TrainingCost, GpuEnergyIsPowerTimesTime) {
  const auto c = training_cost(gpu_profile(), 10);
  EXPECT_DOUBLE_EQ(c.t_epoch_s, 0.01);
  EXPECT_DOUBLE_EQ(c.t_train_s, 0.1);
  EXPECT_DOUBLE_EQ(c.e_train_j, 5.0);
}

TEST(TrainingCost, EmptyDatasetCostsNothing) {
  for (auto p : {cpu_profile(), gpu_profile()}) {
    p.n_samples = 0;
    const auto c = training_cost(p, 10);
    EXPECT_EQ(c.t_epoch_s, 0.0);
    EXPECT_EQ(c.t_train_s, 0.0);
    EXPECT_EQ(c.e_train_j, 0.0);
    EXPECT_EQ(c.total_samples, 0);
  }
}

TEST(TrainingCost, InvalidInputsAreRejected) {
  EXPECT_THROW(training_cost(cpu_profile(), 0), std::invalid_argument);
  auto p = cpu_profile();
  p.alpha_flops_per_s = 0.0;
  EXPECT_THROW(training_cost(p, 1), std::invalid_argument);
  p = gpu_profile();
  p.p_avg_w = 0.0;
  EXPECT_THROW(training_cost(p, 1), std::invalid_argument);
  p = cpu_profile();
  p.n_samples = -1;
  EXPECT_THROW(training_cost(p, 1), std::invalid_argument);
}

TEST(SampleProfiles, HalfAndHalf) {
  const auto ps = sample_profiles(40, 0.5, 11);
  ASSERT_EQ(ps.size(), 40u);
  const auto cpus = std::count_if(ps.begin(), ps.end(), [](const auto& p) { return p.hardware == Hardware::CPU; });
  EXPECT_EQ(cpus, 20);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_EQ(ps[i].id, i);
    EXPECT_NO_THROW(ps[i].validate());
  }
}

TEST(SampleProfiles, ZeroCpuFractionIsAllGpu) {
  for (const auto& p : sample_profiles(25, 0.0, 3)) EXPECT_EQ(p.hardware, Hardware::GPU);
  for (const auto& p : sample_profiles(25, 1.0, 3)) EXPECT_EQ(p.hardware, Hardware::CPU);
}

TEST(SampleProfiles, SameSeedSameList) {
  const auto a = sample_profiles(40, 0.5, 99), b = sample_profiles(40, 0.5, 99);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].n_samples, b[i].n_samples);
    EXPECT_EQ(a[i].hardware, b[i].hardware);
    EXPECT_EQ(a[i].alpha_flops_per_s, b[i].alpha_flops_per_s);
    EXPECT_EQ(a[i].gamma, b[i].gamma);
  }
  const auto c = sample_profiles(40, 0.5, 100);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].n_samples != c[i].n_samples;
  EXPECT_TRUE(differs);
}

TEST(SampleProfiles, CpuSetsAreNestedAcrossFractions) {
  const auto quarter = sample_profiles(40, 0.25, 5);
  const auto half = sample_profiles(40, 0.5, 5);
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_EQ(quarter[i].n_samples, half[i].n_samples);
    if (quarter[i].hardware == Hardware::CPU) EXPECT_EQ(half[i].hardware, Hardware::CPU);
  }
}

TEST(SampleProfiles, GpuIsCheaperOnAverageUnderDefaults) {
  double cpu_e = 0.0, gpu_e = 0.0, cpu_t = 0.0, gpu_t = 0.0;
  const auto ps = sample_profiles(200, 0.5, 8);
  for (const auto& p : ps) {
    const auto c = training_cost(p, 10);
    (p.hardware == Hardware::CPU ? cpu_e : gpu_e) += c.e_train_j;
    (p.hardware == Hardware::CPU ? cpu_t : gpu_t) += c.t_train_s;
  }
  EXPECT_GT(cpu_e, 5.0 * gpu_e);
  EXPECT_GT(cpu_t, 100.0 * gpu_t);
}

TEST(Hardware, Names) {
  EXPECT_EQ(hardware_from_string("cpu"), Hardware::CPU);
  EXPECT_EQ(hardware_from_string("GPU"), Hardware::GPU);
  EXPECT_THROW(hardware_from_string("tpu"), std::invalid_argument);
}

TEST(EffectiveCapacity, FanOutMinusOneCappedByHardware) {
  const CapacityLimits limits{4, 10};
  auto p = cpu_profile();
  p.fan_out = 12;
  EXPECT_EQ(effective_capacity(p, limits), 4);
  p.fan_out = 3;
  EXPECT_EQ(effective_capacity(p, limits), 2);
  p.fan_out = 1;
  EXPECT_EQ(effective_capacity(p, limits), 0);
  auto g = gpu_profile();
  g.fan_out = 12;
  EXPECT_EQ(effective_capacity(g, limits), 10);
}

TEST(MasterSelection, CapacityDominates) {
  std::vector<SatelliteProfile> ps{gpu_profile(), gpu_profile()};
  ps[0].fan_out = 6;  // c~ = 5
  ps[1].fan_out = 3;  // c~ = 2
  ps[1].alpha_flops_per_s = 1e13;
  ps[1].id = 1;
  const std::vector<std::size_t> members{1, 0};
  EXPECT_EQ(engine::master_selection(members, ps, {4, 10}), 0u);
}

TEST(MasterSelection, TiesGoToFasterThenLowerId) {
  std::vector<SatelliteProfile> ps(4, gpu_profile());
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i].id = i;
  const std::vector<std::size_t> all{3, 1, 2, 0};
  EXPECT_EQ(engine::master_selection(all, ps, {4, 10}), 0u);
  ps[2].alpha_flops_per_s = 2e12;
  EXPECT_EQ(engine::master_selection(all, ps, {4, 10}), 2u);
}

TEST(MasterSelection, SingletonAndEmpty) {
  std::vector<SatelliteProfile> ps(3, cpu_profile());
  const std::vector<std::size_t> one{2};
  EXPECT_EQ(engine::master_selection(one, ps, {4, 10}), 2u);
  EXPECT_THROW(engine::master_selection({}, ps, {4, 10}), std::invalid_argument);
}

}  // namespace
