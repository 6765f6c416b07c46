#include "crosatfl/compute.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "crosatfl/rng.hpp"

namespace crosatfl::compute {

std::string_view to_string(Hardware hw) { return hw == Hardware::CPU ? "CPU" : "GPU"; }

Hardware hardware_from_string(std::string_view name) {
  if (name == "CPU" || name == "cpu") return Hardware::CPU;
  if (name == "GPU" || name == "gpu") return Hardware::GPU;
  throw std::invalid_argument("unknown hardware kind '" + std::string(name) + "'");
}

void SatelliteProfile::validate() const {
  const std::string who = "profile " + std::to_string(id) + ": ";
  if (n_samples < 0) throw std::invalid_argument(who + "n_samples must be >= 0");
  if (!(alpha_flops_per_s > 0.0) || !std::isfinite(alpha_flops_per_s)) {
    throw std::invalid_argument(who + "alpha must be > 0");
  }
  if (fan_out < 1) throw std::invalid_argument(who + "fan_out must be >= 1");
  if (!(c_flop > 0.0)) throw std::invalid_argument(who + "c_flop must be > 0");
  if (hardware == Hardware::CPU) {
    if (!(gamma > 0.0) || !(cycles_per_sample > 0.0) || !(freq_hz > 0.0)) {
      throw std::invalid_argument(who + "CPU profiles need gamma, cycles_per_sample, freq_hz > 0");
    }
  } else if (!(p_avg_w > 0.0)) {
    throw std::invalid_argument(who + "GPU profiles need p_avg_w > 0");
  }
}

TrainingCost training_cost(const SatelliteProfile& profile, int local_epochs) {
  if (local_epochs < 1) throw std::invalid_argument("local_epochs must be >= 1");
  profile.validate();
  TrainingCost cost;
  const double flops = static_cast<double>(profile.n_samples) * profile.c_flop;
  cost.t_epoch_s = flops / profile.alpha_flops_per_s;
  cost.t_train_s = local_epochs * cost.t_epoch_s;
  cost.total_samples = local_epochs * profile.n_samples;
  if (profile.hardware == Hardware::CPU) {
    cost.e_train_j = profile.gamma * profile.cycles_per_sample *
                     static_cast<double>(cost.total_samples) * profile.freq_hz * profile.freq_hz;
  } else {
    cost.e_train_j = profile.p_avg_w * cost.t_train_s;
  }
  return cost;
}

void ProfileDistributions::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("empty or invalid range: ") + what);
  };
  check(n_samples.lo >= 0 && n_samples.lo <= n_samples.hi, "n_samples");
  check(fan_out.lo >= 1 && fan_out.lo <= fan_out.hi, "fan_out");
  check(c_flop > 0.0, "c_flop");
  check(flops_per_cycle > 0.0, "flops_per_cycle");
  check(cpu_freq_hz.lo > 0.0 && cpu_freq_hz.lo <= cpu_freq_hz.hi, "cpu_freq_hz");
  check(cpu_gamma.lo > 0.0 && cpu_gamma.lo <= cpu_gamma.hi, "cpu_gamma");
  check(gpu_alpha_flops_per_s.lo > 0.0 && gpu_alpha_flops_per_s.lo <= gpu_alpha_flops_per_s.hi,
        "gpu_alpha_flops_per_s");
  check(gpu_p_avg_w.lo > 0.0 && gpu_p_avg_w.lo <= gpu_p_avg_w.hi, "gpu_p_avg_w");
}

std::vector<SatelliteProfile> sample_profiles(std::size_t count, double cpu_fraction,
                                              std::uint64_t seed,
                                              const ProfileDistributions& dist) {
  if (!(cpu_fraction >= 0.0 && cpu_fraction <= 1.0)) {
    throw std::invalid_argument("cpu_fraction must lie in [0, 1]");
  }
  dist.validate();

  Rng order_rng(derive_seed(seed, "hardware-order"));
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[order_rng.below(i)]);
  const auto n_cpu = static_cast<std::size_t>(std::llround(static_cast<double>(count) * cpu_fraction));

  std::vector<SatelliteProfile> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, "profile", i));
    SatelliteProfile& p = out[i];
    p.id = i;
    p.n_samples = rng.integer(dist.n_samples.lo, dist.n_samples.hi);
    p.fan_out = static_cast<int>(rng.integer(dist.fan_out.lo, dist.fan_out.hi));
    p.c_flop = dist.c_flop;
    p.freq_hz = rng.uniform(dist.cpu_freq_hz.lo, dist.cpu_freq_hz.hi);
    p.gamma = rng.uniform(dist.cpu_gamma.lo, dist.cpu_gamma.hi);
    p.cycles_per_sample = dist.c_flop / dist.flops_per_cycle;
    const double gpu_alpha = rng.uniform(dist.gpu_alpha_flops_per_s.lo, dist.gpu_alpha_flops_per_s.hi);
    p.p_avg_w = rng.uniform(dist.gpu_p_avg_w.lo, dist.gpu_p_avg_w.hi);
    p.hardware = Hardware::GPU;
    p.alpha_flops_per_s = gpu_alpha;
  }
  for (std::size_t r = 0; r < n_cpu; ++r) {
    SatelliteProfile& p = out[order[r]];
    p.hardware = Hardware::CPU;
    p.alpha_flops_per_s = p.freq_hz * dist.flops_per_cycle;
  }
  return out;
}

}  // namespace crosatfl::compute
