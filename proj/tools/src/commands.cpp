#include "crosatfl_cli/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <spdlog/spdlog.h>

#include "crosatfl/engine.hpp"
#include "crosatfl/rng.hpp"
#include "crosatfl_cli/json_reader.hpp"
#include "crosatfl_cli/report.hpp"
#include "crosatfl_cli/scenario.hpp"

namespace crosatfl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

template <typename Writer>
void write_with(const fs::path& path, Writer&& writer) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  writer(out);
}

// Runs a command body and maps exceptions onto exit codes.
template <typename Body>
int guarded(Body&& body) {
  try {
    return body();
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const engine::InfeasibleClustering& e) {
    std::cerr << "infeasible clustering: " << e.what() << "\nK_min = " << e.k_min() << '\n';
    return kInfeasible;
  } catch (const starmask::TrainingDiverged& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return kDiverged;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}

Scenario prepare_scenario(const std::string& path, const std::optional<std::uint64_t>& seed) {
  Scenario s = load_scenario(path);
  if (seed) s.session.seed = *seed;
  attach_policy(s);
  return s;
}

engine::Method parse_method(const std::string& name) {
  try {
    return engine::method_from_string(name);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

// Clustering inputs shared by `cluster` and `train-policy`.
struct ClusteringDoc {
  int local_epochs = 10;
  starmask::Constraints constraints{9, 2, true, {4, 10}, std::nullopt};
  starmask::RewardWeights weights;
  bool explicit_norm_ranges = false;
  starmask::RewardContext context;
  std::size_t norm_samples = 200;
  std::vector<std::vector<compute::SatelliteProfile>> profile_sets;
  // Family used to draw instances.
  bool has_family = false;
  std::size_t family_count = 0;
  std::size_t family_instances = 1;
  double family_cpu_fraction = 0.5;
  std::uint64_t family_seed = 1;
  compute::ProfileDistributions family_dist;

  std::vector<compute::SatelliteProfile> family_member(std::uint64_t seed, std::size_t index) const {
    return compute::sample_profiles(family_count, family_cpu_fraction, derive_seed(seed, "instance", index),
                                    family_dist);
  }
};

std::vector<compute::SatelliteProfile> read_profile_list(const json& list, const std::string& where) {
  if (!list.is_array()) throw InputError(where + ": expected an array");
  std::vector<compute::SatelliteProfile> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    out.push_back(profile_from_json(list[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void read_family(const json& j, const std::string& where, ClusteringDoc& doc, bool multi) {
  ObjectReader f(j, where);
  doc.has_family = true;
  f.require("count", doc.family_count);
  if (multi) f.get("instances", doc.family_instances);
  f.get("cpu_fraction", doc.family_cpu_fraction);
  f.get("seed", doc.family_seed);
  if (const json* d = f.child("distributions")) read_distributions(*d, f.where("distributions"), doc.family_dist);
  f.finish();
}

// `multi` selects the instance-file layout ("instances" / "family") over the
// single-profile layout ("profiles" / "sample").
ClusteringDoc read_clustering_doc(const std::string& path, bool multi, const std::optional<std::uint64_t>& seed) {
  const json j = read_json_file(path);
  ClusteringDoc doc;
  ObjectReader r(j, multi ? "instances" : "profiles");
  r.get("local_epochs", doc.local_epochs);
  if (const json* sm = r.child("starmask")) {
    read_constraints(*sm, "starmask", doc.constraints, doc.weights);
    if (const json* w = sm->contains("weights") ? &sm->at("weights") : nullptr) {
      doc.explicit_norm_ranges = w->contains("norm_ranges");
    }
  }
  if (const json* link = r.child("link")) read_link(*link, "link", doc.context.link, nullptr);
  r.get("model_bits", doc.context.model_bits);
  r.get("norm_samples", doc.norm_samples);
  if (multi) {
    if (const json* list = r.child("instances")) {
      if (!list->is_array()) throw InputError("instances.instances: expected an array");
      for (std::size_t i = 0; i < list->size(); ++i) {
        const std::string where = "instances[" + std::to_string(i) + "]";
        ObjectReader one((*list)[i], where);
        const json* p = one.child("profiles");
        if (!p) throw InputError(where + ".profiles: required");
        doc.profile_sets.push_back(read_profile_list(*p, where + ".profiles"));
        one.finish();
      }
    }
    if (const json* fam = r.child("family")) read_family(*fam, "family", doc, true);
  } else {
    if (const json* list = r.child("profiles")) doc.profile_sets.push_back(read_profile_list(*list, "profiles"));
    if (const json* fam = r.child("sample")) read_family(*fam, "sample", doc, false);
  }
  r.finish();
  if (seed) doc.family_seed = *seed;
  if (doc.has_family) {
    if (!doc.profile_sets.empty()) throw InputError(path + ": give either explicit profiles or a sampling family");
    for (std::size_t i = 0; i < doc.family_instances; ++i) {
      doc.profile_sets.push_back(doc.family_member(doc.family_seed, i));
    }
  }
  if (doc.profile_sets.empty()) throw InputError(path + ": no profiles");
  try {
    doc.constraints.validate();
    doc.weights.validate();
    doc.context.link.validate();
    doc.family_dist.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(path + ": " + e.what());
  }
  if (doc.local_epochs < 1) throw InputError(path + ": local_epochs must be >= 1");
  return doc;
}

std::vector<starmask::Instance> make_instances(const ClusteringDoc& doc) {
  std::vector<starmask::Instance> out;
  for (const auto& set : doc.profile_sets) {
    try {
      for (std::size_t i = 0; i < set.size(); ++i) {
        if (set[i].id != i) throw std::invalid_argument("profile ids must be 0..n-1 in order");
        set[i].validate();
      }
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what());
    }
    out.push_back(starmask::make_instance(set, doc.local_epochs));
  }
  return out;
}

std::string trace_csv(const starmask::TrainResult& r) {
  std::string out = "episode,reward,moving_average\n";
  for (std::size_t i = 0; i < r.rewards.size(); ++i) {
    out += std::to_string(i + 1) + "," + engine::format_double(r.rewards[i]) + "," +
           engine::format_double(r.moving_average[i]) + "\n";
  }
  return out;
}

}  // namespace

int cmd_simulate(const SimulateOptions& o) {
  return guarded([&] {
    const engine::Method method = parse_method(o.method);
    Scenario s = prepare_scenario(o.scenario, o.seed);
    const fs::path dir = o.out_dir ? fs::path(*o.out_dir) : fs::path(s.output_dir);
    spdlog::info("simulate: method={} seed={} out={}", o.method, s.session.seed, dir.string());
    const auto result = engine::run(method, s.session);

    write_text(dir / "scenario.json", dump(scenario_to_json(s)));
    write_text(dir / "ledger.json", dump(ledger_json(result, s.session.seed)));
    write_with(dir / "events.csv", [&](std::ostream& out) { engine::write_event_log(out, result.events); });
    write_with(dir / "metrics.csv", [&](std::ostream& out) { engine::write_metrics(out, result.metrics); });
    write_with(dir / "skips.csv", [&](std::ostream& out) { engine::write_skips(out, result.skips); });
    write_with(dir / "final_model.bin", [&](std::ostream& out) { aggregation::write_model(out, result.final_model); });

    const auto& t = result.ledger.totals;
    std::cout << o.method << ": gs_count=" << t.gs << " intra_lisl=" << t.intra_lisl
              << " inter_lisl=" << t.inter_lisl << " transmission_energy_kj="
              << engine::format_double(t.transmission_energy_j() / 1000.0)
              << " waiting_h=" << engine::format_double(t.waiting_time_s / 3600.0) << ' '
              << result.evaluation.metric << '=' << engine::format_double(result.evaluation.value) << '\n';
    return static_cast<int>(kOk);
  });
}

int cmd_cluster(const ClusterOptions& o) {
  return guarded([&] {
    ClusteringDoc doc = read_clustering_doc(o.profiles, false, o.seed);
    const auto instances = make_instances(doc);
    const auto& instance = instances.front();

    std::shared_ptr<starmask::MaskedPolicy> policy;
    if (o.policy != "greedy") {
      if (o.policy.rfind("trained:", 0) != 0) throw InputError("--policy must be 'greedy' or 'trained:<path>'");
      const std::string file = o.policy.substr(8);
      std::ifstream in(file);
      if (!in) throw InputError("cannot open policy file '" + file + "'");
      starmask::PolicyFile pf;
      try {
        pf = starmask::load_policy(in);
      } catch (const std::exception& e) {
        throw InputError(file + ": " + e.what());
      }
      if (pf.policy.shape().k_max != doc.constraints.k_max) {
        throw InputError("policy k_max does not match starmask.k_max");
      }
      policy = std::make_shared<starmask::MaskedPolicy>(std::move(pf.policy));
      // The policy was trained against these normalizers.
      doc.weights = pf.weights;
      doc.explicit_norm_ranges = true;
    }
    if (!doc.explicit_norm_ranges) {
      doc.weights.norm_ranges = starmask::estimate_norm_ranges(
          instances, doc.constraints, doc.context, doc.norm_samples, derive_seed(doc.family_seed, "norm"));
    }

    auto cluster_one = [&](const starmask::Instance& inst) -> starmask::Construction {
      if (policy) {
        auto ep = starmask::run_clustering_episode(inst, *policy, doc.constraints, starmask::EpisodeMode::Greedy,
                                                   nullptr);
        return {std::move(ep.result), ep.used_fallback};
      }
      return {starmask::greedy_fallback(inst, doc.constraints), false};
    };

    const auto built = cluster_one(instance);
    json out;
    int code = kOk;
    if (const auto* inf = std::get_if<starmask::Infeasible>(&built.result)) {
      out = {{"status", "infeasible"}, {"k_min", inf->k_min}, {"reason", inf->reason}};
      std::cerr << "infeasible clustering: " << inf->reason << "\nK_min = " << inf->k_min << '\n';
      code = kInfeasible;
    } else {
      const auto& p = std::get<starmask::ClusterPartition>(built.result);
      const auto violation = starmask::constraint_violation(p, instance, doc.constraints);
      if (!violation.empty()) throw std::logic_error("clustering produced an invalid partition: " + violation);
      out = partition_json(p, instance, starmask::terminal_reward(p, instance, doc.weights, doc.context));
      out["k_min"] = starmask::capacity_lower_bound(instance, doc.constraints);
      std::cout << "clusters=" << p.k() << " reward=" << engine::format_double(out["reward"]["reward"].get<double>())
                << '\n';
    }
    out["policy"] = o.policy;
    out["used_fallback"] = built.used_fallback;

    if (o.paired > 0) {
      if (!policy) throw InputError("--paired needs --policy trained:<path>");
      if (!doc.has_family) throw InputError("--paired needs a 'sample' family in the profiles document");
      json rows = json::array();
      std::size_t wins = 0;
      for (std::size_t i = 0; i < o.paired; ++i) {
        const auto inst = starmask::make_instance(doc.family_member(derive_seed(doc.family_seed, "paired"), i),
                                                  doc.local_epochs);
        const auto g = starmask::greedy_fallback(inst, doc.constraints);
        const auto pol = cluster_one(inst);
        const auto* gp = std::get_if<starmask::ClusterPartition>(&g);
        const auto* pp = std::get_if<starmask::ClusterPartition>(&pol.result);
        if (!gp || !pp) {
          rows.push_back({{"instance", i}, {"status", "infeasible"}});
          continue;
        }
        const double rg = starmask::terminal_reward(*gp, inst, doc.weights, doc.context).reward;
        const double rp = starmask::terminal_reward(*pp, inst, doc.weights, doc.context).reward;
        const bool win = rp >= rg;
        wins += win;
        rows.push_back({{"instance", i}, {"greedy_reward", rg}, {"policy_reward", rp}, {"policy_at_least_greedy", win}});
      }
      out["paired"] = {{"instances", o.paired},
                       {"policy_at_least_greedy", wins},
                       {"fraction", static_cast<double>(wins) / static_cast<double>(o.paired)},
                       {"rows", rows}};
      std::cout << "paired: policy >= greedy on " << wins << "/" << o.paired << '\n';
    }
    write_text(o.out, dump(out));
    return code;
  });
}

int cmd_train_policy(const TrainOptions& o) {
  return guarded([&] {
    starmask::TrainHyper hyper = o.hyper;
    if (o.seed) hyper.seed = *o.seed;
    const ClusteringDoc doc = read_clustering_doc(o.instances, true, std::nullopt);
    const auto instances = make_instances(doc);
    for (std::size_t i = 0; i < instances.size(); ++i) {
      if (std::holds_alternative<starmask::Infeasible>(starmask::greedy_fallback(instances[i], doc.constraints))) {
        throw InputError("instance " + std::to_string(i) + " admits no feasible partition");
      }
    }
    starmask::RewardWeights weights = doc.weights;
    if (!doc.explicit_norm_ranges) {
      weights.norm_ranges = starmask::estimate_norm_ranges(instances, doc.constraints, doc.context,
                                                           doc.norm_samples, derive_seed(hyper.seed, "norm"));
    }
    spdlog::info("train-policy: {} instances, {} episodes, seed {}", instances.size(), hyper.episodes, hyper.seed);
    const auto result = starmask::train_policy(instances, doc.constraints, weights, doc.context, hyper);

    write_with(o.out, [&](std::ostream& out) { starmask::save_policy(out, {result.policy, hyper, weights}); });
    write_text(o.trace ? *o.trace : o.out + ".trace.csv", trace_csv(result));
    std::cout << "episodes=" << hyper.episodes << " fallback_episodes=" << result.fallback_episodes;
    if (!result.moving_average.empty()) {
      std::cout << " final_moving_average=" << engine::format_double(result.moving_average.back());
    }
    std::cout << '\n';
    return static_cast<int>(kOk);
  });
}

int cmd_compare(const CompareOptions& o) {
  return guarded([&] {
    if (o.methods.empty()) throw InputError("--methods must name at least one method");
    std::vector<engine::Method> methods;
    for (const auto& m : o.methods) methods.push_back(parse_method(m));
    Scenario s = prepare_scenario(o.scenario, o.seed);
    std::vector<ComparisonRun> runs;
    for (std::size_t i = 0; i < methods.size(); ++i) {
      spdlog::info("compare: running {}", o.methods[i]);
      runs.push_back({o.methods[i], engine::run(methods[i], s.session)});
    }
    const fs::path dir(o.out);
    write_text(dir / "comparison.json", dump(comparison_json(runs, s.session.seed)));
    const std::string csv = comparison_csv(runs);
    write_text(dir / "comparison.csv", csv);
    std::cout << csv;
    return static_cast<int>(kOk);
  });
}

}  // namespace crosatfl::cli
