#pragma once

#include <optional>
#include <string_view>

namespace crosatfl::links {

enum class LinkKind { IntraClusterLISL, InterClusterLISL, GroundStation };

std::string_view to_string(LinkKind kind);

// Recorded for provenance only; no rate is derived from these.
struct RfConstants {
  double isl_bandwidth_hz = 2.5e9;
  double gs_bandwidth_hz = 1.25e9;
  double system_loss_db = 3.0;
  double noise_power_w = 2.2e-16;
  double frequency_hz = 27e9;
  double gt_db_per_k = 5.0;
};

struct LinkParams {
  double lisl_rate_bps = 80e6;
  double gs_rate_bps = 16e6;
  double lisl_latency_s = 0.005;
  // When set, LISL latency comes from the endpoint distance (distance / c)
  // wherever the caller knows it; lisl_latency_s is the fallback.
  bool lisl_latency_from_distance = true;
  double gs_latency_s = 0.005;
  double p_lisl_w = 40.0;
  double p_gs_w = 40.0;
  RfConstants rf;

  void validate() const;
  double rate_for(LinkKind kind) const;
  double latency_for(LinkKind kind) const;
  double power_for(LinkKind kind) const;
};

// nullopt is the unreachable (infinite-delay) branch.
using Delay = std::optional<double>;

Delay link_delay(double d_bits, LinkKind kind, const LinkParams& params, bool connected);

// Same as link_delay with an explicit latency in place of the kind default.
Delay link_delay_with_latency(double d_bits, LinkKind kind, const LinkParams& params,
                              bool connected, double latency_s);

double link_energy(double delay_s, LinkKind kind, const LinkParams& params);
double link_energy(const Delay& delay, LinkKind kind, const LinkParams& params);

}  // namespace crosatfl::links
