#include "crosatfl/orbits.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace crosatfl::orbits {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

bool visible_at(const ConstellationConfig& config, const GroundStationSpec& gs, std::size_t index,
                double t) {
  const Vec3 sat = position_of(config, index, t);
  const Vec3 station = ground_station_position(gs, config.earth_radius_km, t);
  return elevation_deg(sat, station) >= gs.min_elevation_deg;
}

}  // namespace

void ConstellationConfig::validate() const {
  if (planes < 1 || sats_per_plane < 1) {
    throw std::invalid_argument("constellation needs at least one plane and one satellite per plane");
  }
  if (!(altitude_km > 0.0)) throw std::invalid_argument("altitude_km must be > 0");
  if (!(inclination_deg >= 0.0 && inclination_deg <= 180.0)) {
    throw std::invalid_argument("inclination_deg must lie in [0, 180]");
  }
  if (!(earth_radius_km > 0.0)) throw std::invalid_argument("earth_radius_km must be > 0");
  if (!std::isfinite(phasing_offset_deg)) throw std::invalid_argument("phasing_offset_deg must be finite");
}

double ConstellationConfig::mean_motion_rad_per_s() const {
  const double r = orbit_radius_km();
  return std::sqrt(kEarthMuKm3PerS2 / (r * r * r));
}

double ConstellationConfig::period_s() const {
  return 2.0 * 3.14159265358979323846 / mean_motion_rad_per_s();
}

void GroundStationSpec::validate() const {
  if (!(std::abs(latitude_deg) <= 90.0)) throw std::invalid_argument("|latitude_deg| must be <= 90");
  if (!std::isfinite(longitude_deg)) throw std::invalid_argument("longitude_deg must be finite");
  if (!(min_elevation_deg >= 0.0 && min_elevation_deg < 90.0)) {
    throw std::invalid_argument("min_elevation_deg must lie in [0, 90)");
  }
}

bool ContactGraph::has_edge(std::size_t i, std::size_t j) const {
  if (i == j) return false;
  const auto key = std::minmax(i, j);
  return std::binary_search(lisl_edges.begin(), lisl_edges.end(),
                            std::pair<std::size_t, std::size_t>(key.first, key.second));
}

bool ContactGraph::is_gs_visible(std::size_t i) const {
  return std::binary_search(gs_visible.begin(), gs_visible.end(), i);
}

Vec3 position_of(const ConstellationConfig& config, std::size_t index, double t_s) {
  const std::size_t plane = index / static_cast<std::size_t>(config.sats_per_plane);
  const std::size_t slot = index % static_cast<std::size_t>(config.sats_per_plane);
  const double raan = static_cast<double>(plane) * (360.0 / config.planes) * kDegToRad;
  const double anomaly0 = (static_cast<double>(slot) * (360.0 / config.sats_per_plane) +
                           static_cast<double>(plane) * config.phasing_offset_deg) *
                          kDegToRad;
  const double u = anomaly0 + config.mean_motion_rad_per_s() * t_s;
  const double inc = config.inclination_deg * kDegToRad;
  const double r = config.orbit_radius_km();
  const double cu = std::cos(u), su = std::sin(u);
  const double co = std::cos(raan), so = std::sin(raan);
  const double ci = std::cos(inc), si = std::sin(inc);
  return {r * (co * cu - so * su * ci), r * (so * cu + co * su * ci), r * (su * si)};
}

std::vector<Vec3> propagate(const ConstellationConfig& config, double t_s) {
  std::vector<Vec3> out(config.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = position_of(config, i, t_s);
  return out;
}

Vec3 ground_station_position(const GroundStationSpec& gs, double earth_radius_km, double t_s) {
  const double lat = gs.latitude_deg * kDegToRad;
  const double lon = gs.longitude_deg * kDegToRad + kEarthRotationRadPerS * t_s;
  return {earth_radius_km * std::cos(lat) * std::cos(lon),
          earth_radius_km * std::cos(lat) * std::sin(lon), earth_radius_km * std::sin(lat)};
}

double elevation_deg(const Vec3& sat, const Vec3& gs_pos) {
  const Vec3 rho{sat[0] - gs_pos[0], sat[1] - gs_pos[1], sat[2] - gs_pos[2]};
  const double up = dot(rho, gs_pos) / (norm(rho) * norm(gs_pos));
  return std::asin(std::clamp(up, -1.0, 1.0)) / kDegToRad;
}

bool line_of_sight(const Vec3& a, const Vec3& b, double earth_radius_km) {
  const Vec3 ab{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const double len2 = dot(ab, ab);
  double s = 0.0;
  if (len2 > 0.0) s = std::clamp(-dot(a, ab) / len2, 0.0, 1.0);
  const Vec3 closest{a[0] + s * ab[0], a[1] + s * ab[1], a[2] + s * ab[2]};
  return norm(closest) > earth_radius_km;
}

double distance_km(const Vec3& a, const Vec3& b) {
  const Vec3 d{a[0] - b[0], a[1] - b[1], a[2] - b[2]};
  return norm(d);
}

ContactGraph contacts(std::span<const Vec3> positions, const GroundStationSpec& gs, double range_km,
                      double t_s, double earth_radius_km) {
  ContactGraph graph;
  graph.time_s = t_s;
  const Vec3 station = ground_station_position(gs, earth_radius_km, t_s);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (elevation_deg(positions[i], station) >= gs.min_elevation_deg) graph.gs_visible.push_back(i);
    for (std::size_t j = i + 1; j < positions.size(); ++j) {
      if (distance_km(positions[i], positions[j]) <= range_km &&
          line_of_sight(positions[i], positions[j], earth_radius_km)) {
        graph.lisl_edges.emplace_back(i, j);
      }
    }
  }
  return graph;
}

std::optional<double> next_gs_visibility(const ConstellationConfig& config,
                                         const GroundStationSpec& gs, std::size_t index,
                                         double t_from, double horizon_s, double step_s) {
  if (!(step_s > 0.0)) throw std::invalid_argument("visibility scan step must be > 0");
  if (visible_at(config, gs, index, t_from)) return t_from;
  double prev = t_from;
  for (double t = t_from + step_s; t <= t_from + horizon_s; t += step_s) {
    if (visible_at(config, gs, index, t)) {
      double lo = prev, hi = t;
      while (hi - lo > 1e-3) {
        const double mid = 0.5 * (lo + hi);
        if (visible_at(config, gs, index, mid)) hi = mid; else lo = mid;
      }
      return hi;
    }
    prev = t;
  }
  return std::nullopt;
}

std::vector<std::size_t> components(const ContactGraph& graph, std::size_t n) {
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& [a, b] : graph.lisl_edges) {
    if (a >= n || b >= n) continue;
    const std::size_t ra = find(a), rb = find(b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::vector<std::size_t> label(n);
  for (std::size_t i = 0; i < n; ++i) label[i] = find(i);
  return label;
}

}  // namespace crosatfl::orbits
