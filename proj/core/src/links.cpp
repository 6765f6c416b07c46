#include "crosatfl/links.hpp"

#include <cmath>
#include <stdexcept>

namespace crosatfl::links {

std::string_view to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::IntraClusterLISL: return "intra_lisl";
    case LinkKind::InterClusterLISL: return "inter_lisl";
    case LinkKind::GroundStation: return "gs";
  }
  return "unknown";
}

void LinkParams::validate() const {
  if (!(lisl_rate_bps > 0.0) || !(gs_rate_bps > 0.0)) throw std::invalid_argument("link rates must be > 0");
  if (!(p_lisl_w >= 0.0) || !(p_gs_w >= 0.0)) throw std::invalid_argument("link powers must be >= 0");
  if (!(lisl_latency_s >= 0.0) || !(gs_latency_s >= 0.0)) {
    throw std::invalid_argument("link latencies must be >= 0");
  }
  if (!std::isfinite(lisl_rate_bps) || !std::isfinite(gs_rate_bps) || !std::isfinite(p_lisl_w) ||
      !std::isfinite(p_gs_w) || !std::isfinite(lisl_latency_s) || !std::isfinite(gs_latency_s)) {
    throw std::invalid_argument("link parameters must be finite");
  }
}

double LinkParams::rate_for(LinkKind kind) const {
  return kind == LinkKind::GroundStation ? gs_rate_bps : lisl_rate_bps;
}

double LinkParams::latency_for(LinkKind kind) const {
  return kind == LinkKind::GroundStation ? gs_latency_s : lisl_latency_s;
}

double LinkParams::power_for(LinkKind kind) const {
  return kind == LinkKind::GroundStation ? p_gs_w : p_lisl_w;
}

Delay link_delay(double d_bits, LinkKind kind, const LinkParams& params, bool connected) {
  return link_delay_with_latency(d_bits, kind, params, connected, params.latency_for(kind));
}

Delay link_delay_with_latency(double d_bits, LinkKind kind, const LinkParams& params,
                              bool connected, double latency_s) {
  if (!(d_bits > 0.0)) throw std::invalid_argument("payload size must be > 0 bits");
  if (!(latency_s >= 0.0)) throw std::invalid_argument("latency must be >= 0");
  if (!connected) return std::nullopt;
  return d_bits / params.rate_for(kind) + latency_s;
}

double link_energy(double delay_s, LinkKind kind, const LinkParams& params) {
  if (!std::isfinite(delay_s) || delay_s < 0.0) {
    throw std::invalid_argument("link energy needs a finite, nonnegative delay");
  }
  return params.power_for(kind) * delay_s;
}

double link_energy(const Delay& delay, LinkKind kind, const LinkParams& params) {
  if (!delay) throw std::invalid_argument("link energy undefined for an unreachable link");
  return link_energy(*delay, kind, params);
}

}  // namespace crosatfl::links
