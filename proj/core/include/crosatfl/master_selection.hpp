#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "crosatfl/compute.hpp"
#include "crosatfl/orbits.hpp"

namespace crosatfl {

// Per-hardware cap on members a master can manage (L_h), indexed by Hardware.
using CapacityLimits = std::array<int, compute::kHardwareKinds>;

// c~ = min(c - 1, L_h), floored at zero.
int effective_capacity(const compute::SatelliteProfile& profile, const CapacityLimits& limits);

namespace engine {

// Member with the largest effective capacity; ties go to the smaller
// per-epoch time, then the lower index. `members` index into `profiles`.
// The contact graph is accepted for callers that track geometry but does
// not change the rule.
std::size_t master_selection(std::span<const std::size_t> members,
                             std::span<const compute::SatelliteProfile> profiles,
                             const CapacityLimits& limits,
                             const orbits::ContactGraph* contact_graph = nullptr);

}  // namespace engine
}  // namespace crosatfl
