#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "crosatfl/engine.hpp"

namespace crosatfl::cli {

struct Scenario {
  engine::SessionConfig session;
  // "greedy" or "trained:<policy file>" (relative to the scenario file).
  std::string clustering = "greedy";
  std::string output_dir = "out";
  std::filesystem::path base_dir = ".";
};

// Every section and key is optional; omitted values keep the defaults, which
// reproduce the reference setup (36x20 Walker-Delta at 570 km / 70 deg,
// Canberra ground station, 40 clients, 9 clusters, G=1, R=40, L=10).
Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
nlohmann::json scenario_to_json(const Scenario& scenario);
Scenario load_scenario(const std::filesystem::path& path);

// Loads the trained policy named by `clustering` into the session config.
void attach_policy(Scenario& scenario);

// Shared by the scenario, profile and instance documents.
compute::SatelliteProfile profile_from_json(const nlohmann::json& j, const std::string& where);
nlohmann::json profile_to_json(const compute::SatelliteProfile& p);

void read_constraints(const nlohmann::json& j, const std::string& where, starmask::Constraints& c,
                      starmask::RewardWeights& w);
nlohmann::json constraints_to_json(const starmask::Constraints& c, const starmask::RewardWeights& w);

void read_link(const nlohmann::json& j, const std::string& where, links::LinkParams& link,
               double* range_km);
nlohmann::json link_to_json(const links::LinkParams& link);

void read_distributions(const nlohmann::json& j, const std::string& where,
                        compute::ProfileDistributions& d);
nlohmann::json distributions_to_json(const compute::ProfileDistributions& d);

}  // namespace crosatfl::cli
