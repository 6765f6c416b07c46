#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crosatfl/engine.hpp"
#include "crosatfl/starmask.hpp"

namespace crosatfl::cli {

// Row labels of the communication / energy / waiting breakdown table.
inline const std::vector<std::string> kTableRows = {
    "Intra-cluster LISLs (No.)",     "Inter-cluster LISLs (No.)", "GS Communication (No.)",
    "Transmission Energy Cost (kJ)", "Training Energy Cost (kJ)", "Transmission Time (Hours)",
    "Waiting Time (Hours)"};

nlohmann::json table_column(const engine::SessionResult& result);
nlohmann::json ledger_json(const engine::SessionResult& result, std::uint64_t seed);

nlohmann::json partition_json(const starmask::ClusterPartition& partition,
                              const starmask::Instance& instance,
                              const starmask::RewardBreakdown& reward);

nlohmann::json reward_json(const starmask::RewardBreakdown& reward);

struct ComparisonRun {
  std::string method;
  engine::SessionResult result;
};

nlohmann::json comparison_json(const std::vector<ComparisonRun>& runs, std::uint64_t seed);
// One row per table label, one column per method.
std::string comparison_csv(const std::vector<ComparisonRun>& runs);

// Serialized with 2-space indentation and a trailing newline.
std::string dump(const nlohmann::json& j);

}  // namespace crosatfl::cli
