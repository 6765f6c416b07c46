#include "crosatfl_cli/report.hpp"

#include <sstream>

#include "crosatfl_cli/scenario.hpp"

namespace crosatfl::cli {

using nlohmann::json;

namespace {

constexpr const char* kTermNames[starmask::kRewardTerms] = {"wait", "energy", "share_var", "count", "mix"};

json entry_json(const engine::LedgerEntry& e) {
  return {{"comp_energy_j", e.comp_energy_j},
          {"lisl_energy_j", e.lisl_energy_j},
          {"gs_energy_j", e.gs_energy_j},
          {"transmission_energy_j", e.transmission_energy_j()},
          {"intra_lisl_count", e.intra_lisl},
          {"inter_lisl_count", e.inter_lisl},
          {"gs_count", e.gs},
          {"transmission_time_s", e.transmission_time_s},
          {"waiting_time_s", e.waiting_time_s}};
}

}  // namespace

json table_column(const engine::SessionResult& r) {
  const auto& t = r.ledger.totals;
  const bool clustered = r.method != engine::Method::FedSyn;
  return {{kTableRows[0], clustered ? json(t.intra_lisl) : json(nullptr)},
          {kTableRows[1], clustered ? json(t.inter_lisl) : json(nullptr)},
          {kTableRows[2], t.gs},
          {kTableRows[3], t.transmission_energy_j() / 1000.0},
          {kTableRows[4], t.comp_energy_j / 1000.0},
          {kTableRows[5], t.transmission_time_s / 3600.0},
          {kTableRows[6], t.waiting_time_s / 3600.0}};
}

json ledger_json(const engine::SessionResult& r, std::uint64_t seed) {
  const auto& t = r.ledger.totals;
  json sats = json::array();
  for (const auto& s : r.ledger.satellites) {
    json row = entry_json(s.entry);
    row["client"] = s.client;
    row["satellite"] = s.satellite;
    row["hardware"] = std::string(compute::to_string(r.profiles[s.client].hardware));
    sats.push_back(row);
  }
  json totals = entry_json(t);
  totals["comp_energy_kj"] = t.comp_energy_j / 1000.0;
  totals["transmission_energy_kj"] = t.transmission_energy_j() / 1000.0;
  totals["transmission_time_h"] = t.transmission_time_s / 3600.0;
  totals["waiting_time_h"] = t.waiting_time_s / 3600.0;
  totals["inter_lisl_mixing_count"] = r.ledger.inter_lisl_mixing;
  totals["inter_lisl_consolidation_count"] = r.ledger.inter_lisl_consolidation;
  totals["makespan_s"] = r.ledger.makespan_s;
  totals["makespan_h"] = r.ledger.makespan_s / 3600.0;

  json clusters = json::array();
  for (std::size_t k = 0; k < r.partition.k(); ++k) {
    clusters.push_back({{"members", r.partition.clusters[k]}, {"master", r.partition.masters[k]}});
  }
  return {{"method", std::string(engine::to_string(r.method))},
          {"seed", seed},
          {"gs_count", t.gs},
          {"intra_lisl_count", t.intra_lisl},
          {"inter_lisl_count", t.inter_lisl},
          {"cluster_count", r.partition.k()},
          {"clusters", clusters},
          {"edge_rounds_run", r.metrics.size()},
          {"skips", r.skips.size()},
          {"totals", totals},
          {"table", table_column(r)},
          {"evaluation",
           {{"metric", r.evaluation.metric},
            {"value", r.evaluation.value},
            {"reference", r.evaluation.reference}}},
          {"client_indices", r.client_indices},
          {"satellites", sats}};
}

json reward_json(const starmask::RewardBreakdown& b) {
  json terms = json::object();
  for (std::size_t t = 0; t < starmask::kRewardTerms; ++t) {
    terms[kTermNames[t]] = {{"raw", b.raw[t]}, {"normalized", b.normalized[t]}, {"weighted", b.weighted[t]}};
  }
  return {{"reward", b.reward}, {"terms", terms}};
}

json partition_json(const starmask::ClusterPartition& p, const starmask::Instance& instance,
                    const starmask::RewardBreakdown& reward) {
  json clusters = json::array();
  for (std::size_t k = 0; k < p.k(); ++k) {
    json hw = json::array();
    for (std::size_t i : p.clusters[k]) hw.push_back(std::string(compute::to_string(instance.profiles[i].hardware)));
    clusters.push_back({{"members", p.clusters[k]}, {"master", p.masters[k]}, {"hardware", hw}});
  }
  return {{"status", "feasible"}, {"cluster_count", p.k()}, {"clusters", clusters}, {"reward", reward_json(reward)}};
}

json comparison_json(const std::vector<ComparisonRun>& runs, std::uint64_t seed) {
  json methods = json::array();
  json columns = json::object();
  json details = json::object();
  for (const auto& run : runs) {
    methods.push_back(run.method);
    columns[run.method] = table_column(run.result);
    const auto& t = run.result.ledger.totals;
    details[run.method] = {{"gs_count", t.gs},
                           {"gs_energy_j", t.gs_energy_j},
                           {"transmission_energy_j", t.transmission_energy_j()},
                           {"comp_energy_j", t.comp_energy_j},
                           {"waiting_time_s", t.waiting_time_s},
                           {"inter_lisl_mixing_count", run.result.ledger.inter_lisl_mixing},
                           {"inter_lisl_consolidation_count", run.result.ledger.inter_lisl_consolidation},
                           {"makespan_s", run.result.ledger.makespan_s},
                           {"eval_metric", run.result.evaluation.metric},
                           {"eval_value", run.result.evaluation.value}};
  }
  json out = {{"seed", seed}, {"methods", methods}, {"rows", kTableRows}, {"table", columns}, {"details", details}};
  const auto find = [&](const std::string& m) -> const ComparisonRun* {
    for (const auto& r : runs) {
      if (r.method == m) return &r;
    }
    return nullptr;
  };
  const auto* fed = find("fedsyn");
  const auto* cro = find("crosatfl");
  if (fed && cro) {
    const auto& f = fed->result.ledger.totals;
    const auto& c = cro->result.ledger.totals;
    out["ratios"] = {{"gs_count", static_cast<double>(f.gs) / static_cast<double>(c.gs)},
                     {"gs_energy", f.gs_energy_j / c.gs_energy_j},
                     {"transmission_energy", f.transmission_energy_j() / c.transmission_energy_j()},
                     {"waiting_time", f.waiting_time_s / c.waiting_time_s}};
  }
  return out;
}

std::string comparison_csv(const std::vector<ComparisonRun>& runs) {
  std::ostringstream out;
  out << "row";
  for (const auto& r : runs) out << ',' << r.method;
  out << '\n';
  std::vector<json> cols;
  for (const auto& r : runs) cols.push_back(table_column(r.result));
  for (const auto& row : kTableRows) {
    out << '"' << row << '"';
    for (const auto& c : cols) {
      const json& v = c.at(row);
      out << ',';
      if (v.is_null()) {
        out << "--";
      } else if (v.is_number_integer()) {
        out << v.get<std::int64_t>();
      } else {
        out << engine::format_double(v.get<double>());
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace crosatfl::cli
