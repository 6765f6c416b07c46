#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace crosatfl::compute {

enum class Hardware { CPU = 0, GPU = 1 };
inline constexpr std::size_t kHardwareKinds = 2;

std::string_view to_string(Hardware hw);
Hardware hardware_from_string(std::string_view name);

// Per-satellite profile. CPU-only fields are ignored for GPU satellites and
// vice versa, but both are carried so a profile can be re-typed without
// redrawing.
struct SatelliteProfile {
  std::size_t id = 0;
  std::int64_t n_samples = 0;
  Hardware hardware = Hardware::CPU;
  double alpha_flops_per_s = 1.0;
  int fan_out = 1;
  double gamma = 0.0;
  double cycles_per_sample = 0.0;
  double freq_hz = 0.0;
  double p_avg_w = 0.0;
  double c_flop = 1e7;

  void validate() const;
};

struct TrainingCost {
  double t_epoch_s = 0.0;
  double t_train_s = 0.0;
  double e_train_j = 0.0;
  std::int64_t total_samples = 0;
};

TrainingCost training_cost(const SatelliteProfile& profile, int local_epochs);

template <typename T>
struct Range {
  T lo{};
  T hi{};
};

struct ProfileDistributions {
  Range<std::int64_t> n_samples{50, 250};
  Range<int> fan_out{3, 12};
  double c_flop = 1e7;
  // CPU throughput is freq * flops_per_cycle; cycles per sample is
  // c_flop / flops_per_cycle so time and energy describe the same work.
  double flops_per_cycle = 4.0;
  Range<double> cpu_freq_hz{1.0e9, 2.0e9};
  Range<double> cpu_gamma{1.0e-28, 3.0e-28};
  Range<double> gpu_alpha_flops_per_s{2.0e12, 5.0e12};
  Range<double> gpu_p_avg_w{10.0, 25.0};

  void validate() const;
};

// Exactly round(count * cpu_fraction) CPU profiles; which satellites are CPU
// comes from a seeded permutation, and every other field is drawn per
// satellite in a fixed order so a given seed yields the same satellites
// under any cpu_fraction.
std::vector<SatelliteProfile> sample_profiles(std::size_t count, double cpu_fraction,
                                              std::uint64_t seed,
                                              const ProfileDistributions& dist = {});

}  // namespace crosatfl::compute
