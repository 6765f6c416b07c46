#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace crosatfl::orbits {

using Vec3 = std::array<double, 3>;

inline constexpr double kEarthMuKm3PerS2 = 398600.4418;
inline constexpr double kEarthRotationRadPerS = 7.2921150e-5;
inline constexpr double kSpeedOfLightKmPerS = 299792.458;

struct ConstellationConfig {
  int planes = 36;
  int sats_per_plane = 20;
  double altitude_km = 570.0;
  double inclination_deg = 70.0;
  double earth_radius_km = 6371.0;
  double phasing_offset_deg = 0.0;

  // Throws std::invalid_argument on violated invariants.
  void validate() const;
  std::size_t size() const { return static_cast<std::size_t>(planes) * sats_per_plane; }
  double orbit_radius_km() const { return earth_radius_km + altitude_km; }
  double mean_motion_rad_per_s() const;
  double period_s() const;
};

struct GroundStationSpec {
  double latitude_deg = -35.40139;
  double longitude_deg = 148.98167;
  double min_elevation_deg = 10.0;

  void validate() const;
};

struct ContactGraph {
  double time_s = 0.0;
  // Unordered pairs stored as (lo, hi), lo < hi, sorted.
  std::vector<std::pair<std::size_t, std::size_t>> lisl_edges;
  // Sorted ids.
  std::vector<std::size_t> gs_visible;

  bool has_edge(std::size_t i, std::size_t j) const;
  bool is_gs_visible(std::size_t i) const;
};

// Earth-centered inertial positions of every satellite, plane-major order
// (index = plane * sats_per_plane + slot).
std::vector<Vec3> propagate(const ConstellationConfig& config, double t_s);

// Single satellite; same ordering as propagate().
Vec3 position_of(const ConstellationConfig& config, std::size_t index, double t_s);

// Ground station in the inertial frame (spherical Earth, Earth rotation
// angle zero at t = 0).
Vec3 ground_station_position(const GroundStationSpec& gs, double earth_radius_km, double t_s);

double elevation_deg(const Vec3& sat, const Vec3& gs_pos);

// True when the segment a-b stays strictly above the Earth sphere.
bool line_of_sight(const Vec3& a, const Vec3& b, double earth_radius_km);

double distance_km(const Vec3& a, const Vec3& b);

ContactGraph contacts(std::span<const Vec3> positions, const GroundStationSpec& gs, double range_km,
                      double t_s, double earth_radius_km = 6371.0);

// Earliest time >= t_from at which the satellite is above the elevation
// mask, scanned at step_s and refined by bisection. nullopt past horizon_s.
std::optional<double> next_gs_visibility(const ConstellationConfig& config,
                                         const GroundStationSpec& gs, std::size_t index,
                                         double t_from, double horizon_s, double step_s = 10.0);

// Connected components over lisl_edges restricted to n nodes; returns a
// component label per node.
std::vector<std::size_t> components(const ContactGraph& graph, std::size_t n);

}  // namespace crosatfl::orbits
