#include "crosatfl_cli/scenario.hpp"

#include <fstream>
#include <memory>

#include "crosatfl_cli/json_reader.hpp"

namespace crosatfl::cli {

using nlohmann::json;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

namespace {

constexpr const char* kTermNames[starmask::kRewardTerms] = {"wait", "energy", "share_var", "count", "mix"};

template <typename T>
void read_pair(const json& j, const std::string& where, std::array<T, 2>& out, const char* a,
               const char* b) {
  ObjectReader r(j, where);
  r.get(a, out[0]);
  r.get(b, out[1]);
  r.finish();
}

template <typename T>
void read_range(const json& j, const std::string& where, compute::Range<T>& out) {
  ObjectReader r(j, where);
  r.get("lo", out.lo);
  r.get("hi", out.hi);
  r.finish();
}

template <typename T>
json range_json(const compute::Range<T>& r) {
  return {{"lo", r.lo}, {"hi", r.hi}};
}

}  // namespace

compute::SatelliteProfile profile_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  compute::SatelliteProfile p;
  r.require("id", p.id);
  r.require("n_samples", p.n_samples);
  std::string hw = "CPU";
  r.require("hardware", hw);
  try {
    p.hardware = compute::hardware_from_string(hw);
  } catch (const std::invalid_argument& e) {
    throw InputError(r.where("hardware") + ": " + e.what());
  }
  r.require("alpha_flops_per_s", p.alpha_flops_per_s);
  r.require("fan_out", p.fan_out);
  r.get("gamma", p.gamma);
  r.get("cycles_per_sample", p.cycles_per_sample);
  r.get("freq_hz", p.freq_hz);
  r.get("p_avg_w", p.p_avg_w);
  r.get("c_flop", p.c_flop);
  r.finish();
  return p;
}

json profile_to_json(const compute::SatelliteProfile& p) {
  return {{"id", p.id},
          {"n_samples", p.n_samples},
          {"hardware", std::string(compute::to_string(p.hardware))},
          {"alpha_flops_per_s", p.alpha_flops_per_s},
          {"fan_out", p.fan_out},
          {"gamma", p.gamma},
          {"cycles_per_sample", p.cycles_per_sample},
          {"freq_hz", p.freq_hz},
          {"p_avg_w", p.p_avg_w},
          {"c_flop", p.c_flop}};
}

void read_constraints(const json& j, const std::string& where, starmask::Constraints& c,
                      starmask::RewardWeights& w) {
  ObjectReader r(j, where);
  r.get("k_max", c.k_max);
  r.get("m_min", c.m_min);
  r.get("homogeneous", c.homogeneous);
  if (const json* caps = r.child("capacity_limits")) {
    read_pair(*caps, r.where("capacity_limits"), c.capacity_limits, "cpu", "gpu");
  }
  if (const json* kt = r.child("k_target")) {
    if (kt->is_null()) {
      c.k_target.reset();
    } else {
      c.k_target = ObjectReader::convert<std::size_t>(*kt, r.where("k_target"));
    }
  }
  if (const json* wj = r.child("weights")) {
    ObjectReader wr(*wj, r.where("weights"));
    wr.get("theta_wait", w.theta_wait);
    wr.get("beta", w.beta);
    wr.get("gamma", w.gamma);
    wr.get("nu_count", w.nu_count);
    wr.get("lambda_mix", w.lambda_mix);
    if (const json* nr = wr.child("norm_ranges")) {
      ObjectReader nrr(*nr, wr.where("norm_ranges"));
      for (std::size_t t = 0; t < starmask::kRewardTerms; ++t) {
        if (const json* one = nrr.child(kTermNames[t])) {
          ObjectReader o(*one, nrr.where(kTermNames[t]));
          o.get("min", w.norm_ranges[t].min);
          o.get("max", w.norm_ranges[t].max);
          o.finish();
        }
      }
      nrr.finish();
    }
    wr.finish();
  }
  r.finish();
}

json constraints_to_json(const starmask::Constraints& c, const starmask::RewardWeights& w) {
  json ranges = json::object();
  for (std::size_t t = 0; t < starmask::kRewardTerms; ++t) {
    ranges[kTermNames[t]] = {{"min", w.norm_ranges[t].min}, {"max", w.norm_ranges[t].max}};
  }
  return {{"k_max", c.k_max},
          {"m_min", c.m_min},
          {"homogeneous", c.homogeneous},
          {"capacity_limits", {{"cpu", c.capacity_limits[0]}, {"gpu", c.capacity_limits[1]}}},
          {"k_target", c.k_target ? json(*c.k_target) : json(nullptr)},
          {"weights",
           {{"theta_wait", w.theta_wait},
            {"beta", w.beta},
            {"gamma", w.gamma},
            {"nu_count", w.nu_count},
            {"lambda_mix", w.lambda_mix},
            {"norm_ranges", ranges}}}};
}

void read_link(const json& j, const std::string& where, links::LinkParams& link, double* range_km) {
  ObjectReader r(j, where);
  r.get("lisl_rate_bps", link.lisl_rate_bps);
  r.get("gs_rate_bps", link.gs_rate_bps);
  r.get("lisl_latency_s", link.lisl_latency_s);
  r.get("lisl_latency_from_distance", link.lisl_latency_from_distance);
  r.get("gs_latency_s", link.gs_latency_s);
  r.get("p_lisl_w", link.p_lisl_w);
  r.get("p_gs_w", link.p_gs_w);
  if (range_km) r.get("range_km", *range_km);
  if (const json* rf = r.child("rf")) {
    ObjectReader f(*rf, r.where("rf"));
    f.get("isl_bandwidth_hz", link.rf.isl_bandwidth_hz);
    f.get("gs_bandwidth_hz", link.rf.gs_bandwidth_hz);
    f.get("system_loss_db", link.rf.system_loss_db);
    f.get("noise_power_w", link.rf.noise_power_w);
    f.get("frequency_hz", link.rf.frequency_hz);
    f.get("gt_db_per_k", link.rf.gt_db_per_k);
    f.finish();
  }
  r.finish();
}

json link_to_json(const links::LinkParams& link) {
  return {{"lisl_rate_bps", link.lisl_rate_bps},
          {"gs_rate_bps", link.gs_rate_bps},
          {"lisl_latency_s", link.lisl_latency_s},
          {"lisl_latency_from_distance", link.lisl_latency_from_distance},
          {"gs_latency_s", link.gs_latency_s},
          {"p_lisl_w", link.p_lisl_w},
          {"p_gs_w", link.p_gs_w},
          {"rf",
           {{"isl_bandwidth_hz", link.rf.isl_bandwidth_hz},
            {"gs_bandwidth_hz", link.rf.gs_bandwidth_hz},
            {"system_loss_db", link.rf.system_loss_db},
            {"noise_power_w", link.rf.noise_power_w},
            {"frequency_hz", link.rf.frequency_hz},
            {"gt_db_per_k", link.rf.gt_db_per_k}}}};
}

void read_distributions(const json& j, const std::string& where, compute::ProfileDistributions& d) {
  ObjectReader r(j, where);
  if (const json* v = r.child("n_samples")) read_range(*v, r.where("n_samples"), d.n_samples);
  if (const json* v = r.child("fan_out")) read_range(*v, r.where("fan_out"), d.fan_out);
  r.get("c_flop", d.c_flop);
  r.get("flops_per_cycle", d.flops_per_cycle);
  if (const json* v = r.child("cpu_freq_hz")) read_range(*v, r.where("cpu_freq_hz"), d.cpu_freq_hz);
  if (const json* v = r.child("cpu_gamma")) read_range(*v, r.where("cpu_gamma"), d.cpu_gamma);
  if (const json* v = r.child("gpu_alpha_flops_per_s")) {
    read_range(*v, r.where("gpu_alpha_flops_per_s"), d.gpu_alpha_flops_per_s);
  }
  if (const json* v = r.child("gpu_p_avg_w")) read_range(*v, r.where("gpu_p_avg_w"), d.gpu_p_avg_w);
  r.finish();
}

json distributions_to_json(const compute::ProfileDistributions& d) {
  return {{"n_samples", range_json(d.n_samples)},
          {"fan_out", range_json(d.fan_out)},
          {"c_flop", d.c_flop},
          {"flops_per_cycle", d.flops_per_cycle},
          {"cpu_freq_hz", range_json(d.cpu_freq_hz)},
          {"cpu_gamma", range_json(d.cpu_gamma)},
          {"gpu_alpha_flops_per_s", range_json(d.gpu_alpha_flops_per_s)},
          {"gpu_p_avg_w", range_json(d.gpu_p_avg_w)}};
}

Scenario scenario_from_json(const json& j, const std::filesystem::path& base_dir) {
  Scenario s;
  s.base_dir = base_dir;
  auto& cfg = s.session;
  ObjectReader r(j, "scenario");
  r.get("seed", cfg.seed);

  if (const json* v = r.child("constellation")) {
    ObjectReader c(*v, "constellation");
    c.get("planes", cfg.constellation.planes);
    c.get("sats_per_plane", cfg.constellation.sats_per_plane);
    c.get("altitude_km", cfg.constellation.altitude_km);
    c.get("inclination_deg", cfg.constellation.inclination_deg);
    c.get("earth_radius_km", cfg.constellation.earth_radius_km);
    c.get("phasing_offset_deg", cfg.constellation.phasing_offset_deg);
    c.finish();
  }
  if (const json* v = r.child("ground_station")) {
    ObjectReader g(*v, "ground_station");
    g.get("latitude_deg", cfg.gs.latitude_deg);
    g.get("longitude_deg", cfg.gs.longitude_deg);
    g.get("min_elevation_deg", cfg.gs.min_elevation_deg);
    g.finish();
  }
  if (const json* v = r.child("link")) read_link(*v, "link", cfg.link, &cfg.range_km);

  if (const json* v = r.child("profiles")) {
    ObjectReader p(*v, "profiles");
    p.get("cpu_fraction", cfg.profiles.cpu_fraction);
    if (const json* d = p.child("distributions")) {
      read_distributions(*d, "profiles.distributions", cfg.profiles.distributions);
    }
    if (const json* list = p.child("inline")) {
      if (!list->is_array()) throw InputError("profiles.inline: expected an array");
      for (std::size_t i = 0; i < list->size(); ++i) {
        cfg.profiles.inline_profiles.push_back(
            profile_from_json((*list)[i], "profiles.inline[" + std::to_string(i) + "]"));
      }
    }
    p.finish();
  }

  if (const json* v = r.child("session")) {
    ObjectReader e(*v, "session");
    e.get("main_rounds", cfg.main_rounds);
    e.get("edge_rounds", cfg.edge_rounds);
    e.get("local_epochs", cfg.local_epochs);
    e.get("k_nbr", cfg.k_nbr);
    e.get("client_count", cfg.client_count);
    std::string reach;
    if (e.get("reachability", reach)) {
      try {
        cfg.reachability = engine::reachability_from_string(reach);
      } catch (const std::invalid_argument& ex) {
        throw InputError(std::string("session.reachability: ") + ex.what());
      }
    }
    if (const json* ids = e.child("client_indices")) {
      if (!ids->is_array()) throw InputError("session.client_indices: expected an array");
      for (const auto& id : *ids) {
        cfg.client_indices.push_back(ObjectReader::convert<std::size_t>(id, "session.client_indices"));
      }
    }
    e.get("start_time_s", cfg.start_time_s);
    e.get("gs_search_horizon_s", cfg.gs_search_horizon_s);
    e.get("gs_search_step_s", cfg.gs_search_step_s);
    e.finish();
  }

  if (const json* v = r.child("model")) {
    ObjectReader m(*v, "model");
    std::string name;
    try {
      if (m.get("trainer", name)) cfg.model.trainer = aggregation::trainer_kind_from_string(name);
      if (m.get("partitioning", name)) cfg.model.task.partitioning = aggregation::partitioning_from_string(name);
    } catch (const std::invalid_argument& ex) {
      throw InputError(std::string("model: ") + ex.what());
    }
    m.get("dim", cfg.model.task.dim);
    m.get("separation", cfg.model.task.separation);
    m.get("test_samples", cfg.model.task.test_samples);
    m.get("learning_rate", cfg.model.learning_rate);
    m.get("batch_size", cfg.model.batch_size);
    m.get("model_bits", cfg.model.model_bits);
    m.finish();
  }

  if (const json* v = r.child("starmask")) {
    ObjectReader sm(*v, "starmask");
    sm.get("clustering", s.clustering);
    json rest = *v;
    rest.erase("clustering");
    read_constraints(rest, "starmask", cfg.constraints, cfg.reward_weights);
    for (const auto& [key, value] : v->items()) sm.child(key.c_str());
    sm.finish();
    if (s.clustering != "greedy" && s.clustering.rfind("trained:", 0) != 0) {
      throw InputError("starmask.clustering: expected 'greedy' or 'trained:<path>'");
    }
  }

  if (const json* v = r.child("skip")) {
    ObjectReader k(*v, "skip");
    k.get("cooldown_length", cfg.fairness.cooldown_length);
    k.get("tau_max", cfg.fairness.tau_max);
    k.get("all_participation_period", cfg.fairness.all_participation_period);
    k.get("phi_decay", cfg.fairness.phi_decay);
    k.get("theta_t", cfg.skip_weights.theta_t);
    k.get("theta_e", cfg.skip_weights.theta_e);
    k.get("theta_h", cfg.skip_weights.theta_h);
    k.get("theta_f", cfg.skip_weights.theta_f);
    if (const json* hp = k.child("hw_penalty")) {
      read_pair(*hp, "skip.hw_penalty", cfg.skip_weights.hw_penalty, "cpu", "gpu");
    }
    k.finish();
  }

  if (const json* v = r.child("output")) {
    ObjectReader o(*v, "output");
    o.get("dir", s.output_dir);
    o.finish();
  }
  r.finish();

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("scenario: ") + e.what());
  }
  return s;
}

json scenario_to_json(const Scenario& s) {
  const auto& cfg = s.session;
  json profiles = {{"cpu_fraction", cfg.profiles.cpu_fraction},
                   {"distributions", distributions_to_json(cfg.profiles.distributions)}};
  if (!cfg.profiles.inline_profiles.empty()) {
    json list = json::array();
    for (const auto& p : cfg.profiles.inline_profiles) list.push_back(profile_to_json(p));
    profiles["inline"] = list;
  }
  json session = {{"main_rounds", cfg.main_rounds},
                  {"edge_rounds", cfg.edge_rounds},
                  {"local_epochs", cfg.local_epochs},
                  {"k_nbr", cfg.k_nbr},
                  {"client_count", cfg.client_count},
                  {"reachability", std::string(engine::to_string(cfg.reachability))},
                  {"start_time_s", cfg.start_time_s},
                  {"gs_search_horizon_s", cfg.gs_search_horizon_s},
                  {"gs_search_step_s", cfg.gs_search_step_s}};
  if (!cfg.client_indices.empty()) session["client_indices"] = cfg.client_indices;
  json link = link_to_json(cfg.link);
  link["range_km"] = cfg.range_km;
  json starmask = constraints_to_json(cfg.constraints, cfg.reward_weights);
  starmask["clustering"] = s.clustering;
  return {{"seed", cfg.seed},
          {"constellation",
           {{"planes", cfg.constellation.planes},
            {"sats_per_plane", cfg.constellation.sats_per_plane},
            {"altitude_km", cfg.constellation.altitude_km},
            {"inclination_deg", cfg.constellation.inclination_deg},
            {"earth_radius_km", cfg.constellation.earth_radius_km},
            {"phasing_offset_deg", cfg.constellation.phasing_offset_deg}}},
          {"ground_station",
           {{"latitude_deg", cfg.gs.latitude_deg},
            {"longitude_deg", cfg.gs.longitude_deg},
            {"min_elevation_deg", cfg.gs.min_elevation_deg}}},
          {"link", link},
          {"profiles", profiles},
          {"session", session},
          {"model",
           {{"trainer", std::string(aggregation::to_string(cfg.model.trainer))},
            {"partitioning", std::string(aggregation::to_string(cfg.model.task.partitioning))},
            {"dim", cfg.model.task.dim},
            {"separation", cfg.model.task.separation},
            {"test_samples", cfg.model.task.test_samples},
            {"learning_rate", cfg.model.learning_rate},
            {"batch_size", cfg.model.batch_size},
            {"model_bits", cfg.model.model_bits}}},
          {"starmask", starmask},
          {"skip",
           {{"cooldown_length", cfg.fairness.cooldown_length},
            {"tau_max", cfg.fairness.tau_max},
            {"all_participation_period", cfg.fairness.all_participation_period},
            {"phi_decay", cfg.fairness.phi_decay},
            {"theta_t", cfg.skip_weights.theta_t},
            {"theta_e", cfg.skip_weights.theta_e},
            {"theta_h", cfg.skip_weights.theta_h},
            {"theta_f", cfg.skip_weights.theta_f},
            {"hw_penalty", {{"cpu", cfg.skip_weights.hw_penalty[0]}, {"gpu", cfg.skip_weights.hw_penalty[1]}}}}},
          {"output", {{"dir", s.output_dir}}}};
}

Scenario load_scenario(const std::filesystem::path& path) {
  const json j = read_json_file(path.string());
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return scenario_from_json(j, base);
}

void attach_policy(Scenario& s) {
  if (s.clustering == "greedy") {
    s.session.policy.reset();
    return;
  }
  std::filesystem::path file = s.clustering.substr(std::string("trained:").size());
  if (file.is_relative()) file = s.base_dir / file;
  std::ifstream in(file);
  if (!in) throw InputError("cannot open policy file '" + file.string() + "'");
  try {
    auto loaded = starmask::load_policy(in);
    s.session.policy = std::make_shared<starmask::MaskedPolicy>(std::move(loaded.policy));
    s.session.validate();
  } catch (const std::exception& e) {
    throw InputError(file.string() + ": " + e.what());
  }
}

}  // namespace crosatfl::cli
