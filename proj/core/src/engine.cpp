#include "crosatfl/engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <variant>

#include "crosatfl/rng.hpp"

namespace crosatfl::engine {

using aggregation::ClusterModel;
using aggregation::ModelVector;
using links::LinkKind;

Method method_from_string(std::string_view name) {
  if (name == "crosatfl") return Method::CroSatFL;
  if (name == "fedsyn") return Method::FedSyn;
  if (name == "no-skip") return Method::NoSkip;
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::CroSatFL: return "crosatfl";
    case Method::FedSyn: return "fedsyn";
    case Method::NoSkip: return "no-skip";
  }
  return "?";
}

Reachability reachability_from_string(std::string_view name) {
  if (name == "direct") return Reachability::Direct;
  if (name == "multihop") return Reachability::Multihop;
  if (name == "full") return Reachability::Full;
  throw std::invalid_argument("unknown reachability '" + std::string(name) + "'");
}

std::string_view to_string(Reachability mode) {
  switch (mode) {
    case Reachability::Direct: return "direct";
    case Reachability::Multihop: return "multihop";
    case Reachability::Full: return "full";
  }
  return "?";
}

void SessionConfig::validate() const {
  constellation.validate();
  gs.validate();
  link.validate();
  if (!(range_km > 0.0)) throw std::invalid_argument("range_km must be > 0");
  if (main_rounds < 1) throw std::invalid_argument("main_rounds must be >= 1");
  if (edge_rounds < 1) throw std::invalid_argument("edge_rounds must be >= 1");
  if (local_epochs < 1) throw std::invalid_argument("local_epochs must be >= 1");
  if (k_nbr < 1) throw std::invalid_argument("k_nbr must be >= 1");
  if (client_count < 1 || client_count > constellation.size()) {
    throw std::invalid_argument("client_count must lie in [1, constellation size]");
  }
  if (!client_indices.empty() && client_indices.size() != client_count) {
    throw std::invalid_argument("client_indices must list exactly client_count satellites");
  }
  {
    std::vector<std::size_t> sorted = client_indices;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw std::invalid_argument("client_indices must be distinct");
    }
    if (!sorted.empty() && sorted.back() >= constellation.size()) {
      throw std::invalid_argument("client_indices must be constellation indices");
    }
  }
  if (!(profiles.cpu_fraction >= 0.0 && profiles.cpu_fraction <= 1.0)) {
    throw std::invalid_argument("cpu_fraction must lie in [0, 1]");
  }
  profiles.distributions.validate();
  if (!profiles.inline_profiles.empty() && profiles.inline_profiles.size() != client_count) {
    throw std::invalid_argument("inline profiles must match client_count");
  }
  if (!(model.learning_rate > 0.0)) throw std::invalid_argument("model learning_rate must be > 0");
  if (model.batch_size < 1) throw std::invalid_argument("model batch_size must be >= 1");
  if (!(model.model_bits > 0.0)) throw std::invalid_argument("model_bits must be > 0");
  if (model.task.dim < 1) throw std::invalid_argument("model dimension must be >= 1");
  constraints.validate();
  reward_weights.validate();
  fairness.validate();
  skip_weights.validate();
  if (policy && policy->shape().k_max != constraints.k_max) {
    throw std::invalid_argument("policy k_max does not match the clustering constraints");
  }
  if (!std::isfinite(start_time_s)) throw std::invalid_argument("start_time_s must be finite");
  if (!(gs_search_horizon_s > 0.0)) throw std::invalid_argument("gs_search_horizon_s must be > 0");
  if (!(gs_search_step_s > 0.0)) throw std::invalid_argument("gs_search_step_s must be > 0");
}

LedgerEntry& LedgerEntry::operator+=(const LedgerEntry& o) {
  comp_energy_j += o.comp_energy_j;
  lisl_energy_j += o.lisl_energy_j;
  gs_energy_j += o.gs_energy_j;
  intra_lisl += o.intra_lisl;
  inter_lisl += o.inter_lisl;
  gs += o.gs;
  transmission_time_s += o.transmission_time_s;
  waiting_time_s += o.waiting_time_s;
  return *this;
}

std::vector<std::size_t> select_clients(const SessionConfig& config) {
  const std::size_t n = config.constellation.size();
  if (!config.client_indices.empty()) {
    std::vector<std::size_t> ids = config.client_indices;
    std::vector<std::size_t> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw std::invalid_argument("client_indices has duplicates");
    }
    if (sorted.back() >= n) throw std::invalid_argument("client index outside the constellation");
    return ids;
  }
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  Rng rng(derive_seed(config.seed, "clients"));
  for (std::size_t i = 0; i < config.client_count; ++i) {
    std::swap(pool[i], pool[i + rng.below(n - i)]);
  }
  pool.resize(config.client_count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<compute::SatelliteProfile> session_profiles(const SessionConfig& config) {
  if (!config.profiles.inline_profiles.empty()) {
    const auto& p = config.profiles.inline_profiles;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i].id != i) throw std::invalid_argument("inline profile ids must be 0..n-1 in order");
      p[i].validate();
    }
    return p;
  }
  return compute::sample_profiles(config.client_count, config.profiles.cpu_fraction,
                                  derive_seed(config.seed, "profiles"), config.profiles.distributions);
}

starmask::Construction cluster_clients(const SessionConfig& config,
                                       const std::vector<compute::SatelliteProfile>& profiles) {
  const auto instance = starmask::make_instance(profiles, config.local_epochs);
  starmask::Construction out{starmask::Infeasible{}, false};
  if (config.policy) {
    auto ep = starmask::run_clustering_episode(instance, *config.policy, config.constraints,
                                               starmask::EpisodeMode::Greedy, nullptr);
    out.result = std::move(ep.result);
    out.used_fallback = ep.used_fallback;
  } else {
    out.result = starmask::greedy_fallback(instance, config.constraints);
  }
  if (const auto* inf = std::get_if<starmask::Infeasible>(&out.result)) {
    throw InfeasibleClustering(inf->k_min, inf->reason);
  }
  return out;
}

namespace {

enum class Transfer { Intra, Mix, Consolidate, GsDown, GsUp };

std::string_view action_name(Transfer t) {
  switch (t) {
    case Transfer::Intra: return "intra_lisl";
    case Transfer::Mix: return "inter_lisl_mix";
    case Transfer::Consolidate: return "inter_lisl_consolidate";
    case Transfer::GsDown: return "gs_downlink";
    case Transfer::GsUp: return "gs_uplink";
  }
  return "?";
}

LinkKind link_kind(Transfer t) {
  switch (t) {
    case Transfer::Intra: return LinkKind::IntraClusterLISL;
    case Transfer::Mix:
    case Transfer::Consolidate: return LinkKind::InterClusterLISL;
    default: return LinkKind::GroundStation;
  }
}

// Shared state of one session: clients, their data, the ledger and the log.
class Session {
 public:
  Session(const SessionConfig& config, Method method) : cfg_(config) {
    cfg_.validate();
    result_.method = method;
    result_.client_indices = select_clients(cfg_);
    result_.profiles = session_profiles(cfg_);
    const std::size_t n = result_.profiles.size();
    for (const auto& p : result_.profiles) {
      costs_.push_back(compute::training_cost(p, cfg_.local_epochs));
      hardware_.push_back(p.hardware);
      samples_.push_back(static_cast<double>(p.n_samples));
    }
    result_.ledger.satellites.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      result_.ledger.satellites[i].client = i;
      result_.ledger.satellites[i].satellite = result_.client_indices[i];
    }
    busy_.assign(n, 0.0);
    build_task();
  }

  const SessionConfig& cfg() const { return cfg_; }
  SessionResult& result() { return result_; }
  const SessionResult& result() const { return result_; }
  std::size_t size() const { return costs_.size(); }
  const compute::TrainingCost& cost(std::size_t i) const { return costs_[i]; }
  std::span<const compute::TrainingCost> costs() const { return costs_; }
  std::span<const compute::Hardware> hardware() const { return hardware_; }
  double samples(std::size_t i) const { return samples_[i]; }
  double bits() const { return cfg_.model.model_bits; }

  ModelVector initial_model() const {
    const std::size_t dim = cfg_.model.trainer == aggregation::TrainerKind::Logistic
                                ? cfg_.model.task.dim + 1
                                : cfg_.model.task.dim;
    ModelVector m;
    m.weights.assign(dim, 0.0);
    m.wire_bits = bits();
    return m;
  }

  ModelVector train(const ModelVector& from, std::size_t client, std::size_t round) const {
    aggregation::TrainerSpec spec;
    spec.kind = cfg_.model.trainer;
    spec.learning_rate = cfg_.model.learning_rate;
    spec.batch_size = cfg_.model.batch_size;
    spec.seed = derive_seed(cfg_.seed, "local-train", round * size() + client);
    if (spec.kind == aggregation::TrainerKind::Logistic) {
      spec.data = task_.clients[client];
    } else {
      spec.target = targets_[client];
    }
    return aggregation::local_train(from, spec, cfg_.local_epochs);
  }

  double evaluate(const ModelVector& m) const {
    if (cfg_.model.trainer == aggregation::TrainerKind::Logistic) {
      return aggregation::accuracy(m.weights, task_.test);
    }
    return objective(m.weights);
  }

  Evaluation final_evaluation(const ModelVector& m) const {
    Evaluation e;
    if (cfg_.model.trainer == aggregation::TrainerKind::Logistic) {
      e.metric = "accuracy";
      e.value = evaluate(m);
      e.reference = aggregation::accuracy(aggregation::centralized_logistic(task_.pooled), task_.test);
    } else {
      e.metric = "objective";
      e.value = evaluate(m);
      e.reference = objective(optimum_);
    }
    return e;
  }

  // Position of a client's satellite.
  orbits::Vec3 position(std::size_t client, double t) const {
    return orbits::position_of(cfg_.constellation, result_.client_indices[client], t);
  }

  double lisl_latency(double distance_km) const {
    return cfg_.link.lisl_latency_from_distance ? distance_km / orbits::kSpeedOfLightKmPerS
                                                : cfg_.link.lisl_latency_s;
  }

  double next_window(std::size_t client, double t_from) const {
    const auto t = orbits::next_gs_visibility(cfg_.constellation, cfg_.gs, result_.client_indices[client],
                                              t_from, cfg_.gs_search_horizon_s, cfg_.gs_search_step_s);
    if (!t) {
      throw std::runtime_error("satellite " + std::to_string(result_.client_indices[client]) +
                               " never sees the ground station within the search horizon");
    }
    return *t;
  }

  // Logs and charges one model transfer; returns its delay. `distance_km` is
  // used for LISL latency and ignored for ground-station transfers.
  double transfer(double t, std::size_t round, std::int64_t cluster, std::size_t actor,
                  std::int64_t peer, Transfer what, double distance_km = 0.0) {
    const LinkKind kind = link_kind(what);
    const links::Delay delay =
        kind == LinkKind::GroundStation
            ? links::link_delay(bits(), kind, cfg_.link, true)
            : links::link_delay_with_latency(bits(), kind, cfg_.link, true, lisl_latency(distance_km));
    const double energy = links::link_energy(delay, kind, cfg_.link);
    auto& e = result_.ledger.satellites[actor].entry;
    switch (what) {
      case Transfer::Intra:
        ++e.intra_lisl;
        e.lisl_energy_j += energy;
        break;
      case Transfer::Mix:
        ++e.inter_lisl;
        ++result_.ledger.inter_lisl_mixing;
        e.lisl_energy_j += energy;
        break;
      case Transfer::Consolidate:
        ++e.inter_lisl;
        ++result_.ledger.inter_lisl_consolidation;
        e.lisl_energy_j += energy;
        break;
      case Transfer::GsDown:
      case Transfer::GsUp:
        ++e.gs;
        e.gs_energy_j += energy;
        break;
    }
    e.transmission_time_s += *delay;
    busy_[actor] += *delay;
    round_energy_ += energy;
    log(t, round, cluster, static_cast<std::int64_t>(actor), std::string(action_name(what)), peer, bits(),
        *delay, energy, 0.0);
    return *delay;
  }

  void train_event(double t, std::size_t round, std::int64_t cluster, std::size_t client) {
    const auto& c = costs_[client];
    result_.ledger.satellites[client].entry.comp_energy_j += c.e_train_j;
    busy_[client] += c.t_train_s;
    round_energy_ += c.e_train_j;
    round_comp_ += c.e_train_j;
    log(t, round, cluster, static_cast<std::int64_t>(client), "train", kNobody, 0.0, c.t_train_s,
        c.e_train_j, 0.0);
  }

  void note(double t, std::size_t round, std::int64_t cluster, std::int64_t actor, std::string action,
            std::int64_t peer = kNobody) {
    log(t, round, cluster, actor, std::move(action), peer, 0.0, 0.0, 0.0, 0.0);
  }

  // Closes a lockstep phase: every listed satellite that was not busy for
  // the whole phase accrues the difference as waiting time.
  void close_phase(double t_start, double t_end, std::size_t round,
                   const std::vector<std::pair<std::size_t, std::int64_t>>& who) {
    for (const auto& [client, cluster] : who) {
      add_waiting(t_end, round, cluster, client, (t_end - t_start) - busy_[client]);
    }
    std::fill(busy_.begin(), busy_.end(), 0.0);
  }

  void add_waiting(double t, std::size_t round, std::int64_t cluster, std::size_t client, double w) {
    if (!(w > 0.0)) return;
    result_.ledger.satellites[client].entry.waiting_time_s += w;
    log(t, round, cluster, static_cast<std::int64_t>(client), "wait", kNobody, 0.0, 0.0, 0.0, w);
  }

  void reset_busy() { std::fill(busy_.begin(), busy_.end(), 0.0); }

  void begin_round() {
    round_energy_ = 0.0;
    round_comp_ = 0.0;
  }
  double round_energy() const { return round_energy_; }
  double round_comp() const { return round_comp_; }

  void finish(const ModelVector& final_model, double t_end) {
    auto& ledger = result_.ledger;
    ledger.totals = {};
    for (const auto& s : ledger.satellites) ledger.totals += s.entry;
    ledger.makespan_s = t_end - cfg_.start_time_s;
    result_.final_model = final_model;
    result_.evaluation = final_evaluation(final_model);
  }

 private:
  void log(double t, std::size_t round, std::int64_t cluster, std::int64_t actor, std::string action,
           std::int64_t peer, double bits, double delay, double energy, double waiting) {
    result_.events.push_back({t, round, cluster, actor, std::move(action), peer, bits, delay, energy, waiting});
  }

  void build_task() {
    std::vector<std::int64_t> counts;
    for (const auto& p : result_.profiles) counts.push_back(p.n_samples);
    if (cfg_.model.trainer == aggregation::TrainerKind::Logistic) {
      auto spec = cfg_.model.task;
      spec.seed = derive_seed(cfg_.seed, "task");
      task_ = aggregation::make_synthetic_task(counts, spec);
      return;
    }
    const std::size_t dim = cfg_.model.task.dim;
    Rng rng(derive_seed(cfg_.seed, "targets"));
    std::vector<double> center(dim);
    for (double& c : center) c = rng.normal();
    optimum_.assign(dim, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      std::vector<double> t(dim);
      for (std::size_t d = 0; d < dim; ++d) {
        t[d] = center[d] + 0.5 * rng.normal();
        optimum_[d] += samples_[i] * t[d];
      }
      total += samples_[i];
      targets_.push_back(std::move(t));
    }
    for (double& o : optimum_) o /= total;
  }

  // Sample-weighted mean of the clients' quadratic losses.
  double objective(const std::vector<double>& w) const {
    double s = 0.0, total = 0.0;
    for (std::size_t i = 0; i < targets_.size(); ++i) {
      double l = 0.0;
      for (std::size_t d = 0; d < w.size(); ++d) l += (w[d] - targets_[i][d]) * (w[d] - targets_[i][d]);
      s += samples_[i] * l;
      total += samples_[i];
    }
    return s / total;
  }

  SessionConfig cfg_;
  SessionResult result_;
  std::vector<compute::TrainingCost> costs_;
  std::vector<compute::Hardware> hardware_;
  std::vector<double> samples_;
  std::vector<double> busy_;
  aggregation::SyntheticTask task_;
  std::vector<std::vector<double>> targets_;
  std::vector<double> optimum_;
  double round_energy_ = 0.0;
  double round_comp_ = 0.0;
};

// Reachable masters (by cluster index) and the one-way propagation distance
// to each, for one snapshot of the constellation.
struct MasterReach {
  std::vector<std::vector<std::size_t>> reachable;
  std::vector<std::vector<double>> distance_km;  // [from][to]
};

MasterReach master_reach(const Session& s, const std::vector<std::size_t>& masters, double t) {
  const auto& cfg = s.cfg();
  const std::size_t k = masters.size();
  const auto positions = orbits::propagate(cfg.constellation, t);
  std::vector<std::size_t> sat(k);
  for (std::size_t a = 0; a < k; ++a) sat[a] = s.result().client_indices[masters[a]];

  MasterReach out;
  out.reachable.assign(k, {});
  out.distance_km.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      out.distance_km[a][b] = orbits::distance_km(positions[sat[a]], positions[sat[b]]);
    }
  }
  const double earth = cfg.constellation.earth_radius_km;
  if (cfg.reachability == Reachability::Full) {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        if (a != b) out.reachable[a].push_back(b);
      }
    }
  } else if (cfg.reachability == Reachability::Direct) {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        if (a != b && out.distance_km[a][b] <= cfg.range_km &&
            orbits::line_of_sight(positions[sat[a]], positions[sat[b]], earth)) {
          out.reachable[a].push_back(b);
        }
      }
    }
  } else {
    const auto graph = orbits::contacts(positions, cfg.gs, cfg.range_km, t, earth);
    const std::size_t n = positions.size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& [i, j] : graph.lisl_edges) {
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
    // Breadth-first from each master; the path length along the BFS tree
    // stands in for the relay distance.
    for (std::size_t a = 0; a < k; ++a) {
      std::vector<double> dist(n, -1.0);
      std::queue<std::size_t> q;
      dist[sat[a]] = 0.0;
      q.push(sat[a]);
      while (!q.empty()) {
        const std::size_t u = q.front();
        q.pop();
        for (std::size_t v : adj[u]) {
          if (dist[v] < 0.0) {
            dist[v] = dist[u] + orbits::distance_km(positions[u], positions[v]);
            q.push(v);
          }
        }
      }
      for (std::size_t b = 0; b < k; ++b) {
        if (b != a && dist[sat[b]] >= 0.0) {
          out.reachable[a].push_back(b);
          out.distance_km[a][b] = dist[sat[b]];
        }
      }
    }
  }
  return out;
}

SessionResult run_clustered(const SessionConfig& config, Method method, bool skip_enabled) {
  Session s(config, method);
  const auto& cfg = s.cfg();
  const auto construction = cluster_clients(cfg, s.result().profiles);
  const auto partition = std::get<starmask::ClusterPartition>(construction.result);
  s.result().partition = partition;
  s.result().clustering_used_fallback = construction.used_fallback;

  const std::size_t K = partition.k();
  const auto& clusters = partition.clusters;
  const auto& masters = partition.masters;
  std::vector<ClusterModel> models(K);
  for (std::size_t k = 0; k < K; ++k) {
    models[k].cluster_id = k;
    models[k].model = s.initial_model();
    for (std::size_t i : clusters[k]) models[k].n_total += s.samples(i);
  }
  std::vector<std::pair<std::size_t, std::int64_t>> everyone, master_list;
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i : clusters[k]) everyone.emplace_back(i, static_cast<std::int64_t>(k));
    master_list.emplace_back(masters[k], static_cast<std::int64_t>(k));
  }
  const std::size_t lead = static_cast<std::size_t>(
      std::min_element(masters.begin(), masters.end()) - masters.begin());

  auto fairness = skipone::FairnessState::initial(s.size(), cfg.fairness);
  double t = cfg.start_time_s;

  // Masters pass a model to their members over intra-cluster LISLs, in
  // parallel; returns the latest arrival.
  auto relay = [&](std::size_t k, double t_ready, std::size_t round) {
    double end = t_ready;
    const auto pm = s.position(masters[k], t_ready);
    for (std::size_t j : clusters[k]) {
      if (j == masters[k]) continue;
      const double d = orbits::distance_km(pm, s.position(j, t_ready));
      end = std::max(end, t_ready + s.transfer(t_ready, round, static_cast<std::int64_t>(k), masters[k],
                                               static_cast<std::int64_t>(j), Transfer::Intra, d));
    }
    return end;
  };

  // Initialization: each master fetches w(0) in its next ground-station
  // window and relays it.
  {
    s.begin_round();
    double end = t;
    for (std::size_t k = 0; k < K; ++k) {
      const double tw = s.next_window(masters[k], t);
      const double d = s.transfer(tw, 0, static_cast<std::int64_t>(k), masters[k], kGroundStation,
                                  Transfer::GsDown);
      end = std::max(end, relay(k, tw + d, 0));
    }
    s.close_phase(t, end, 0, everyone);
    t = end;
  }

  std::size_t round = 0;
  ModelVector final_model;
  for (int g = 0; g < cfg.main_rounds; ++g) {
    for (int r = 0; r < cfg.edge_rounds; ++r) {
      ++round;
      s.begin_round();
      RoundMetrics m;
      m.round = round;
      m.start_s = t;
      std::vector<double> ready(K, 0.0);  // aggregation time, relative to t
      std::vector<std::pair<std::size_t, std::int64_t>> active;
      const auto positions_t = [&](std::size_t i) { return s.position(i, t); };

      for (std::size_t k = 0; k < K; ++k) {
        const auto ck = static_cast<std::int64_t>(k);
        const std::size_t master = masters[k];
        std::vector<std::size_t> participants;
        if (skip_enabled) {
          const auto sel = skipone::select_participants(clusters[k], s.costs(), s.hardware(), fairness,
                                                        cfg.skip_weights, round, master);
          participants = sel.participants;
          std::vector<std::size_t> skipped;
          if (sel.skipped) {
            skipped.push_back(*sel.skipped);
            s.note(t, round, ck, static_cast<std::int64_t>(*sel.skipped), "skip");
            s.result().skips.push_back({round, k, *sel.skipped, sel.delta_t_s, sel.delta_e_j, sel.psi});
            ++m.skipped;
          }
          skipone::update_fairness(fairness, skipped, participants, round);
        } else {
          participants = clusters[k];
          std::sort(participants.begin(), participants.end());
        }

        const auto master_pos = positions_t(master);
        std::vector<ModelVector> updates;
        std::vector<double> weights;
        for (std::size_t i : participants) {
          active.emplace_back(i, ck);
          s.train_event(t, round, ck, i);
          const double ti = s.cost(i).t_train_s;
          m.barrier_s = std::max(m.barrier_s, ti);
          updates.push_back(s.train(models[k].model, i, round));
          weights.push_back(s.samples(i));
          double arrive = ti;
          if (i != master) {
            const double d = orbits::distance_km(positions_t(i), master_pos);
            arrive += s.transfer(t + ti, round, ck, i, static_cast<std::int64_t>(master), Transfer::Intra, d);
          }
          ready[k] = std::max(ready[k], arrive);
        }
        m.participants += participants.size();
        models[k].model = aggregation::weighted_average(updates, weights);
        s.note(t + ready[k], round, ck, static_cast<std::int64_t>(master), "aggregate");
      }

      // Cross-cluster mixing against the round-start snapshot.
      const auto reach = master_reach(s, masters, t);
      auto mix = aggregation::cross_aggregate_round(models, reach.reachable, cfg.k_nbr,
                                                    derive_seed(cfg.seed, "mixing", round));
      double duration = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        double done = ready[k];
        for (std::size_t idx = 1; idx < mix.groups[k].size(); ++idx) {
          const std::size_t j = mix.groups[k][idx];
          const double d = s.transfer(t + ready[j], round, static_cast<std::int64_t>(k), masters[j],
                                      static_cast<std::int64_t>(masters[k]), Transfer::Mix,
                                      reach.distance_km[j][k]);
          done = std::max(done, ready[j] + d);
        }
        duration = std::max(duration, done);
      }
      models = std::move(mix.models);
      m.mixing_transmissions = mix.transmissions;

      s.close_phase(t, t + duration, round, active);
      m.duration_s = duration;
      m.comp_energy_j = s.round_comp();
      m.energy_j = s.round_energy();
      m.eval_metric = s.evaluate(aggregation::consolidate_final(models));
      s.result().metrics.push_back(m);
      t += duration;
    }

    // On-orbit consolidation at the lowest-id master.
    const double t_cons = t;
    double end = t;
    const auto lead_pos = s.position(masters[lead], t);
    for (std::size_t k = 0; k < K; ++k) {
      if (k == lead) continue;
      const double d = orbits::distance_km(s.position(masters[k], t), lead_pos);
      end = std::max(end, t + s.transfer(t, round, static_cast<std::int64_t>(k), masters[k],
                                         static_cast<std::int64_t>(masters[lead]), Transfer::Consolidate, d));
    }
    final_model = aggregation::consolidate_final(models);
    s.note(end, round, static_cast<std::int64_t>(lead), static_cast<std::int64_t>(masters[lead]), "consolidate");
    s.close_phase(t_cons, end, round, master_list);
    t = end;

    if (g + 1 < cfg.main_rounds) {
      // Next main round starts from the consolidated model, spread on orbit.
      const double t_spread = t;
      double spread_end = t;
      for (std::size_t k = 0; k < K; ++k) {
        double arrive = t;
        if (k != lead) {
          const double d = orbits::distance_km(lead_pos, s.position(masters[k], t));
          arrive += s.transfer(t, round, static_cast<std::int64_t>(k), masters[lead],
                               static_cast<std::int64_t>(masters[k]), Transfer::Consolidate, d);
        }
        spread_end = std::max(spread_end, relay(k, arrive, round));
        models[k].model = final_model;
      }
      s.close_phase(t_spread, spread_end, round, everyone);
      t = spread_end;
    }
  }

  // Collection: one ground-station uplink per master.
  double end = t;
  for (std::size_t k = 0; k < K; ++k) {
    const double tw = s.next_window(masters[k], t);
    s.add_waiting(tw, round, static_cast<std::int64_t>(k), masters[k], tw - t);
    const double d = s.transfer(tw, round, static_cast<std::int64_t>(k), masters[k], kGroundStation,
                                Transfer::GsUp);
    end = std::max(end, tw + d);
  }
  s.reset_busy();
  s.finish(final_model, end);
  return std::move(s.result());
}

}  // namespace

SessionResult run_crosatfl(const SessionConfig& config) {
  return run_clustered(config, Method::CroSatFL, true);
}

SessionResult run_ablation_no_skip(const SessionConfig& config) {
  return run_clustered(config, Method::NoSkip, false);
}

SessionResult run_fedsyn(const SessionConfig& config) {
  Session s(config, Method::FedSyn);
  const auto& cfg = s.cfg();
  const std::size_t n = s.size();
  ModelVector global = s.initial_model();
  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) weights[i] = s.samples(i);

  // Clients start holding w(0); each round is train, uplink in the next
  // window, FedAvg at the ground station, downlink in the next window.
  std::vector<double> ready(n, cfg.start_time_s);
  double round_end = cfg.start_time_s;
  const std::size_t rounds = static_cast<std::size_t>(cfg.main_rounds) * cfg.edge_rounds;
  for (std::size_t round = 1; round <= rounds; ++round) {
    s.begin_round();
    RoundMetrics m;
    m.round = round;
    m.start_s = round_end;
    m.participants = n;
    std::vector<ModelVector> updates;
    std::vector<double> busy(n, 0.0);
    double t_agg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s.train_event(ready[i], round, -1, i);
      const double ti = s.cost(i).t_train_s;
      m.barrier_s = std::max(m.barrier_s, ti);
      updates.push_back(s.train(global, i, round));
      const double tw = s.next_window(i, ready[i] + ti);
      const double d = s.transfer(tw, round, -1, i, kGroundStation, Transfer::GsUp);
      busy[i] = ti + d;
      t_agg = std::max(t_agg, tw + d);
    }
    global = aggregation::weighted_average(updates, weights);
    s.note(t_agg, round, -1, kGroundStation, "aggregate");
    double next_end = t_agg;
    for (std::size_t i = 0; i < n; ++i) {
      const double tw = s.next_window(i, t_agg);
      const double d = s.transfer(tw, round, -1, i, kGroundStation, Transfer::GsDown);
      busy[i] += d;
      s.add_waiting(tw + d, round, -1, i, (tw + d - ready[i]) - busy[i]);
      ready[i] = tw + d;
      next_end = std::max(next_end, ready[i]);
    }
    s.reset_busy();
    m.duration_s = next_end - round_end;
    m.comp_energy_j = s.round_comp();
    m.energy_j = s.round_energy();
    m.eval_metric = s.evaluate(global);
    s.result().metrics.push_back(m);
    round_end = next_end;
  }
  s.finish(global, round_end);
  return std::move(s.result());
}

SessionResult run(Method method, const SessionConfig& config) {
  switch (method) {
    case Method::CroSatFL: return run_crosatfl(config);
    case Method::FedSyn: return run_fedsyn(config);
    case Method::NoSkip: return run_ablation_no_skip(config);
  }
  throw std::invalid_argument("unknown method");
}

double logged_transmission_energy(const std::vector<Event>& events) {
  double total = 0.0;
  for (const auto& e : events) {
    if (e.bits > 0.0) total += e.energy_j;
  }
  return total;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

std::string party(std::int64_t id) {
  if (id == kGroundStation) return "gs";
  if (id == kNobody) return "";
  return std::to_string(id);
}

}  // namespace

void write_event_log(std::ostream& out, const std::vector<Event>& events) {
  out << "t_s,round,cluster,actor,action,peer,bits,delay_s,energy_j,waiting_s\n";
  for (const auto& e : events) {
    out << format_double(e.t_s) << ',' << e.round << ',' << (e.cluster < 0 ? "" : std::to_string(e.cluster))
        << ',' << party(e.actor) << ',' << e.action << ',' << party(e.peer) << ',' << format_double(e.bits)
        << ',' << format_double(e.delay_s) << ',' << format_double(e.energy_j) << ','
        << format_double(e.waiting_s) << '\n';
  }
}

void write_metrics(std::ostream& out, const std::vector<RoundMetrics>& metrics) {
  out << "round,start_s,duration_s,barrier_s,comp_energy_j,energy_j,participants,skipped,"
         "mixing_transmissions,eval_metric\n";
  for (const auto& m : metrics) {
    out << m.round << ',' << format_double(m.start_s) << ',' << format_double(m.duration_s) << ','
        << format_double(m.barrier_s) << ',' << format_double(m.comp_energy_j) << ','
        << format_double(m.energy_j) << ',' << m.participants << ',' << m.skipped << ','
        << m.mixing_transmissions << ',' << format_double(m.eval_metric) << '\n';
  }
}

void write_skips(std::ostream& out, const std::vector<SkipRecord>& skips) {
  out << "round,cluster,satellite,delta_t_s,delta_e_j,psi\n";
  for (const auto& k : skips) {
    out << k.round << ',' << k.cluster << ',' << k.satellite << ',' << format_double(k.delta_t_s) << ','
        << format_double(k.delta_e_j) << ',' << format_double(k.psi) << '\n';
  }
}

}  // namespace crosatfl::engine
