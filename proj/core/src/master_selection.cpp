#include "crosatfl/master_selection.hpp"

#include <algorithm>
#include <stdexcept>

namespace crosatfl {

int effective_capacity(const compute::SatelliteProfile& profile, const CapacityLimits& limits) {
  const int limit = limits[static_cast<std::size_t>(profile.hardware)];
  return std::max(0, std::min(profile.fan_out - 1, limit));
}

namespace engine {

std::size_t master_selection(std::span<const std::size_t> members,
                             std::span<const compute::SatelliteProfile> profiles,
                             const CapacityLimits& limits, const orbits::ContactGraph*) {
  if (members.empty()) throw std::invalid_argument("master_selection: empty cluster");
  auto per_epoch = [&](std::size_t i) {
    const auto& p = profiles[i];
    return static_cast<double>(p.n_samples) * p.c_flop / p.alpha_flops_per_s;
  };
  std::size_t best = members.front();
  for (std::size_t m : members.subspan(1)) {
    const int cb = effective_capacity(profiles[best], limits);
    const int cm = effective_capacity(profiles[m], limits);
    if (cm != cb) {
      if (cm > cb) best = m;
      continue;
    }
    const double tb = per_epoch(best), tm = per_epoch(m);
    if (tm < tb || (tm == tb && m < best)) best = m;
  }
  return best;
}

}  // namespace engine
}  // namespace crosatfl
