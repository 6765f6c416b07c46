#include "crosatfl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "crosatfl/rng.hpp"

namespace crosatfl::starmask {

namespace {

constexpr const char* kPolicyMagic = "crosatfl-policy";
constexpr int kPolicyVersion = 1;

struct Normalizers {
  double t_max = 1.0;
  double e_max = 1.0;
  double e_sum = 1.0;
  double fan_out_max = 1.0;
  double cap_max = 1.0;
};

Normalizers normalizers(const Instance& instance, const Constraints& c) {
  Normalizers n;
  double t = 0.0, e = 0.0, es = 0.0, f = 0.0;
  for (std::size_t i = 0; i < instance.size(); ++i) {
    t = std::max(t, instance.costs[i].t_epoch_s);
    e = std::max(e, instance.costs[i].e_train_j);
    es += instance.costs[i].e_train_j;
    f = std::max(f, static_cast<double>(instance.profiles[i].fan_out));
  }
  if (t > 0.0) n.t_max = t;
  if (e > 0.0) n.e_max = e;
  if (es > 0.0) n.e_sum = es;
  if (f > 0.0) n.fan_out_max = f;
  n.cap_max = std::max(1, *std::max_element(c.capacity_limits.begin(), c.capacity_limits.end()));
  return n;
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// y = W x + b for a rows x cols row-major W.
void affine(const double* w, const double* b, const double* x, std::size_t rows, std::size_t cols,
            double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = b[r] + dot(w + r * cols, x, cols);
}

struct MlpCache {
  std::vector<double> input;
  std::vector<double> hidden;
  double out = 0.0;
};

// Two-layer scalar head: out = w2 . tanh(W1 x + b1) + b2.
struct HeadOffsets {
  std::size_t w1, b1, w2, b2, in;
};

MlpCache head_forward(const std::vector<double>& p, const HeadOffsets& o, std::size_t hidden,
                      std::vector<double> input) {
  MlpCache c;
  c.input = std::move(input);
  c.hidden.resize(hidden);
  affine(&p[o.w1], &p[o.b1], c.input.data(), hidden, o.in, c.hidden.data());
  for (double& h : c.hidden) h = std::tanh(h);
  c.out = p[o.b2] + dot(&p[o.w2], c.hidden.data(), hidden);
  return c;
}

// Backprop of d(out) = g; returns d(input).
std::vector<double> head_backward(const std::vector<double>& p, const HeadOffsets& o,
                                  std::size_t hidden, const MlpCache& c, double g,
                                  std::span<double> grad) {
  std::vector<double> d_in(o.in, 0.0);
  grad[o.b2] += g;
  for (std::size_t h = 0; h < hidden; ++h) {
    grad[o.w2 + h] += g * c.hidden[h];
    const double dh = g * p[o.w2 + h] * (1.0 - c.hidden[h] * c.hidden[h]);
    if (dh == 0.0) continue;
    grad[o.b1 + h] += dh;
    const double* row = &p[o.w1 + h * o.in];
    double* grow = &grad[o.w1 + h * o.in];
    for (std::size_t j = 0; j < o.in; ++j) {
      grow[j] += dh * c.input[j];
      d_in[j] += dh * row[j];
    }
  }
  return d_in;
}

}  // namespace

Observation observe(const AssignmentState& state, const Instance& instance, const Constraints& c) {
  const Normalizers nz = normalizers(instance, c);
  const std::size_t t = state.step;
  const auto& prof = instance.profiles[t];
  const auto& cost = instance.costs[t];
  const double n = static_cast<double>(instance.size());
  Observation obs;
  obs.sat = {instance.shares[t] * n, prof.hardware == compute::Hardware::GPU ? 1.0 : 0.0,
             cost.t_epoch_s / nz.t_max, cost.e_train_j / nz.e_max,
             static_cast<double>(prof.fan_out) / nz.fan_out_max};
  obs.clusters.assign(c.k_max, std::vector<double>(kClusterFeatures, 0.0));
  obs.active.assign(c.k_max, false);
  for (std::size_t k = 0; k < state.k_open && k < c.k_max; ++k) {
    const ClusterSummary& s = state.summaries[k];
    if (!s.active) continue;
    obs.active[k] = true;
    const double size = static_cast<double>(s.size);
    const double cpu = static_cast<double>(s.hw_counts[0]) / size;
    const double gpu = static_cast<double>(s.hw_counts[1]) / size;
    const bool match = s.hw_counts[static_cast<std::size_t>(prof.hardware)] == s.size;
    obs.clusters[k] = {1.0,
                       size / (nz.cap_max + 1.0),
                       s.t_min_s / nz.t_max,
                       s.t_max_s / nz.t_max,
                       s.energy_sum_j / nz.e_sum,
                       s.share_sum,
                       cpu,
                       gpu,
                       static_cast<double>(s.remaining_capacity) / nz.cap_max,
                       std::abs(cost.t_epoch_s - 0.5 * (s.t_min_s + s.t_max_s)) / nz.t_max,
                       match ? 1.0 : 0.0};
  }
  obs.global = {static_cast<double>(state.k_open) / static_cast<double>(c.k_max),
                (n - static_cast<double>(t) - 1.0) / n};
  return obs;
}

struct MaskedPolicy::Layout {
  std::size_t wq, bq, wk, bk, wv, bv;
  HeadOffsets cluster, open, critic;
  std::size_t total;
};

MaskedPolicy::Layout MaskedPolicy::layout() const {
  const std::size_t a = shape_.attention_dim, h = shape_.hidden;
  Layout l{};
  std::size_t off = 0;
  auto take = [&](std::size_t n) {
    const std::size_t at = off;
    off += n;
    return at;
  };
  l.wq = take(a * kSatFeatures);
  l.bq = take(a);
  l.wk = take(a * kClusterFeatures);
  l.bk = take(a);
  l.wv = take(a * kClusterFeatures);
  l.bv = take(a);
  auto head = [&](std::size_t in) {
    HeadOffsets o{};
    o.in = in;
    o.w1 = take(h * in);
    o.b1 = take(h);
    o.w2 = take(h);
    o.b2 = take(1);
    return o;
  };
  l.cluster = head(kSatFeatures + kClusterFeatures + a);
  l.open = head(kSatFeatures + a + kGlobalFeatures);
  l.critic = head(kSatFeatures + a + kGlobalFeatures);
  l.total = off;
  return l;
}

MaskedPolicy::MaskedPolicy(PolicyShape shape, std::uint64_t seed) : shape_(shape) {
  if (shape.k_max < 1 || shape.attention_dim < 1 || shape.hidden < 1) {
    throw std::invalid_argument("policy dimensions must be >= 1");
  }
  const Layout l = layout();
  params_.assign(l.total, 0.0);
  Rng rng(derive_seed(seed, "policy-init"));
  auto fill = [&](std::size_t at, std::size_t rows, std::size_t cols) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (std::size_t i = 0; i < rows * cols; ++i) params_[at + i] = rng.uniform(-bound, bound);
  };
  const std::size_t a = shape.attention_dim, h = shape.hidden;
  fill(l.wq, a, kSatFeatures);
  fill(l.wk, a, kClusterFeatures);
  fill(l.wv, a, kClusterFeatures);
  for (const HeadOffsets* o : {&l.cluster, &l.open, &l.critic}) {
    fill(o->w1, h, o->in);
    fill(o->w2, 1, h);
  }
}

namespace {

struct ForwardCache {
  std::vector<double> q;
  std::vector<std::vector<double>> keys, vals;
  std::vector<double> attn;  // over all slots, zero when inactive
  std::vector<double> z;
  std::vector<MlpCache> cluster;  // per slot (empty input when inactive)
  MlpCache open, critic;
  std::vector<double> logits;
};

}  // namespace

PolicyOutput MaskedPolicy::forward(const Observation& obs) const {
  PolicyOutput out;
  const Layout l = layout();
  const std::size_t a = shape_.attention_dim, h = shape_.hidden, k_max = shape_.k_max;
  if (obs.clusters.size() != k_max) throw std::invalid_argument("observation k_max mismatch");
  std::vector<double> q(a);
  affine(&params_[l.wq], &params_[l.bq], obs.sat.data(), a, kSatFeatures, q.data());
  std::vector<std::vector<double>> vals(k_max, std::vector<double>(a, 0.0));
  std::vector<double> score(k_max, -std::numeric_limits<double>::infinity());
  double smax = -std::numeric_limits<double>::infinity();
  const double scale = 1.0 / std::sqrt(static_cast<double>(a));
  for (std::size_t k = 0; k < k_max; ++k) {
    if (!obs.active[k]) continue;
    std::vector<double> key(a);
    affine(&params_[l.wk], &params_[l.bk], obs.clusters[k].data(), a, kClusterFeatures, key.data());
    affine(&params_[l.wv], &params_[l.bv], obs.clusters[k].data(), a, kClusterFeatures, vals[k].data());
    score[k] = dot(q.data(), key.data(), a) * scale;
    smax = std::max(smax, score[k]);
  }
  std::vector<double> z(a, 0.0);
  double zsum = 0.0;
  std::vector<double> attn(k_max, 0.0);
  for (std::size_t k = 0; k < k_max; ++k) {
    if (!obs.active[k]) continue;
    attn[k] = std::exp(score[k] - smax);
    zsum += attn[k];
  }
  for (std::size_t k = 0; k < k_max; ++k) {
    if (!obs.active[k]) continue;
    attn[k] /= zsum;
    for (std::size_t d = 0; d < a; ++d) z[d] += attn[k] * vals[k][d];
  }
  out.logits.assign(k_max + 1, 0.0);
  for (std::size_t k = 0; k < k_max; ++k) {
    if (!obs.active[k]) continue;
    std::vector<double> in(obs.sat);
    in.insert(in.end(), obs.clusters[k].begin(), obs.clusters[k].end());
    in.insert(in.end(), z.begin(), z.end());
    out.logits[k] = head_forward(params_, l.cluster, h, std::move(in)).out;
  }
  std::vector<double> in(obs.sat);
  in.insert(in.end(), z.begin(), z.end());
  in.insert(in.end(), obs.global.begin(), obs.global.end());
  out.logits[k_max] = head_forward(params_, l.open, h, in).out;
  out.value = head_forward(params_, l.critic, h, std::move(in)).out;
  return out;
}

std::vector<double> MaskedPolicy::probabilities(const Observation& obs,
                                                std::span<const Action> feasible) const {
  const PolicyOutput out = forward(obs);
  std::vector<double> p(shape_.k_max + 1, 0.0);
  if (feasible.empty()) return p;
  double m = -std::numeric_limits<double>::infinity();
  for (Action a : feasible) m = std::max(m, out.logits[a]);
  double s = 0.0;
  for (Action a : feasible) {
    p[a] = std::exp(out.logits[a] - m);
    s += p[a];
  }
  for (Action a : feasible) p[a] /= s;
  return p;
}

double MaskedPolicy::accumulate_gradient(const Observation& obs, std::span<const Action> feasible,
                                         Action action, double advantage, double value_target,
                                         double entropy_coef, double value_coef,
                                         std::span<double> grad) const {
  if (grad.size() != params_.size()) throw std::invalid_argument("gradient buffer size mismatch");
  if (std::find(feasible.begin(), feasible.end(), action) == feasible.end()) {
    throw std::invalid_argument("action is not feasible");
  }
  const Layout l = layout();
  const std::size_t a = shape_.attention_dim, h = shape_.hidden, k_max = shape_.k_max;
  const double scale = 1.0 / std::sqrt(static_cast<double>(a));

  // Forward with caches.
  ForwardCache fc;
  fc.q.resize(a);
  affine(&params_[l.wq], &params_[l.bq], obs.sat.data(), a, kSatFeatures, fc.q.data());
  fc.keys.assign(k_max, std::vector<double>(a, 0.0));
  fc.vals.assign(k_max, std::vector<double>(a, 0.0));
  fc.attn.assign(k_max, 0.0);
  double smax = -std::numeric_limits<double>::infinity();
  std::vector<double> score(k_max, 0.0);
  for (std::size_t k = 0; k < k_max; ++k) {
    if (!obs.active[k]) continue;
    affine(&params_[l.wk], &params_[l.bk], obs.clusters[k].data(), a, kClusterFeatures, fc.keys[k].data());
    affine(&params_[l.wv], &params_[l.bv], obs.clusters[k].data(), a, kClusterFeatures, fc.vals[k].data());
    score[k] = dot(fc.q.data(), fc.keys[k].data(), a) * scale;
    smax = std::max(smax, score[k]);
  }
  double zsum = 0.0;
  for (std::size_t k = 0; k < k_max; ++k) {
    if (obs.active[k]) zsum += (fc.attn[k] = std::exp(score[k] - smax));
  }
  fc.z.assign(a, 0.0);
  for (std::size_t k = 0; k < k_max; ++k) {
    if (!obs.active[k]) continue;
    fc.attn[k] /= zsum;
    for (std::size_t d = 0; d < a; ++d) fc.z[d] += fc.attn[k] * fc.vals[k][d];
  }
  fc.cluster.resize(k_max);
  fc.logits.assign(k_max + 1, 0.0);
  for (std::size_t k = 0; k < k_max; ++k) {
    if (!obs.active[k]) continue;
    std::vector<double> in(obs.sat);
    in.insert(in.end(), obs.clusters[k].begin(), obs.clusters[k].end());
    in.insert(in.end(), fc.z.begin(), fc.z.end());
    fc.cluster[k] = head_forward(params_, l.cluster, h, std::move(in));
    fc.logits[k] = fc.cluster[k].out;
  }
  std::vector<double> in(obs.sat);
  in.insert(in.end(), fc.z.begin(), fc.z.end());
  in.insert(in.end(), obs.global.begin(), obs.global.end());
  fc.open = head_forward(params_, l.open, h, in);
  fc.critic = head_forward(params_, l.critic, h, std::move(in));
  fc.logits[k_max] = fc.open.out;

  // Masked softmax, log-prob and entropy.
  double m = -std::numeric_limits<double>::infinity();
  for (Action f : feasible) m = std::max(m, fc.logits[f]);
  double s = 0.0;
  for (Action f : feasible) s += std::exp(fc.logits[f] - m);
  const double log_s = std::log(s) + m;
  std::vector<double> p(k_max + 1, 0.0), logp(k_max + 1, 0.0);
  double entropy = 0.0;
  for (Action f : feasible) {
    logp[f] = fc.logits[f] - log_s;
    p[f] = std::exp(logp[f]);
    entropy -= p[f] * logp[f];
  }
  const double value = fc.critic.out;
  const double loss = -advantage * logp[action] - entropy_coef * entropy +
                      value_coef * 0.5 * (value - value_target) * (value - value_target);

  // dLoss/dlogit over the feasible support.
  std::vector<double> g_logit(k_max + 1, 0.0);
  for (Action f : feasible) {
    const double indicator = f == action ? 1.0 : 0.0;
    g_logit[f] = -advantage * (indicator - p[f]) + entropy_coef * p[f] * (logp[f] + entropy);
  }
  const double g_value = value_coef * (value - value_target);

  std::vector<double> dz(a, 0.0);
  auto add_dz = [&](const std::vector<double>& d_in, std::size_t z_at) {
    for (std::size_t d = 0; d < a; ++d) dz[d] += d_in[z_at + d];
  };
  for (std::size_t k = 0; k < k_max; ++k) {
    if (!obs.active[k] || g_logit[k] == 0.0) continue;
    add_dz(head_backward(params_, l.cluster, h, fc.cluster[k], g_logit[k], grad),
           kSatFeatures + kClusterFeatures);
  }
  if (g_logit[k_max] != 0.0) {
    add_dz(head_backward(params_, l.open, h, fc.open, g_logit[k_max], grad), kSatFeatures);
  }
  add_dz(head_backward(params_, l.critic, h, fc.critic, g_value, grad), kSatFeatures);

  // Attention backward.
  std::vector<double> d_attn(k_max, 0.0);
  double weighted = 0.0;
  for (std::size_t k = 0; k < k_max; ++k) {
    if (!obs.active[k]) continue;
    d_attn[k] = dot(fc.vals[k].data(), dz.data(), a);
    weighted += fc.attn[k] * d_attn[k];
  }
  std::vector<double> dq(a, 0.0);
  for (std::size_t k = 0; k < k_max; ++k) {
    if (!obs.active[k]) continue;
    const double ds = fc.attn[k] * (d_attn[k] - weighted) * scale;
    const auto& phi = obs.clusters[k];
    for (std::size_t d = 0; d < a; ++d) {
      dq[d] += ds * fc.keys[k][d];
      const double dk = ds * fc.q[d];
      const double dv = fc.attn[k] * dz[d];
      grad[l.bk + d] += dk;
      grad[l.bv + d] += dv;
      for (std::size_t j = 0; j < kClusterFeatures; ++j) {
        grad[l.wk + d * kClusterFeatures + j] += dk * phi[j];
        grad[l.wv + d * kClusterFeatures + j] += dv * phi[j];
      }
    }
  }
  for (std::size_t d = 0; d < a; ++d) {
    grad[l.bq + d] += dq[d];
    for (std::size_t j = 0; j < kSatFeatures; ++j) grad[l.wq + d * kSatFeatures + j] += dq[d] * obs.sat[j];
  }
  return loss;
}

EpisodeResult run_clustering_episode(const Instance& instance, const MaskedPolicy& policy,
                                     const Constraints& constraints, EpisodeMode mode, Rng* rng) {
  if (policy.shape().k_max != constraints.k_max) throw std::invalid_argument("policy k_max mismatch");
  if (mode == EpisodeMode::Sample && rng == nullptr) throw std::invalid_argument("sampling needs an rng");
  auto choose = [&](const AssignmentState& state, std::span<const Action> feasible) -> Action {
    const auto p = policy.probabilities(observe(state, instance, constraints), feasible);
    if (mode == EpisodeMode::Greedy) {
      Action best = feasible.front();
      for (Action f : feasible) {
        if (p[f] > p[best]) best = f;
      }
      return best;
    }
    double u = rng->uniform();
    for (Action f : feasible) {
      u -= p[f];
      if (u < 0.0) return f;
    }
    return feasible.back();
  };
  Construction c = construct(instance, constraints, choose);
  return {std::move(c.result), c.used_fallback};
}

TrainResult train_policy(std::span<const Instance> instances, const Constraints& constraints,
                         const RewardWeights& weights, const RewardContext& context,
                         const TrainHyper& hyper, PolicyShape shape) {
  if (instances.empty()) throw std::invalid_argument("training needs at least one instance");
  constraints.validate();
  weights.validate();
  shape.k_max = constraints.k_max;
  TrainResult result;
  result.policy = MaskedPolicy(shape, hyper.seed);
  MaskedPolicy& policy = result.policy;
  const std::size_t n_params = policy.parameter_count();
  std::vector<double> grad(n_params), m1(n_params, 0.0), m2(n_params, 0.0);
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  Rng rng(derive_seed(hyper.seed, "train"));
  double window_sum = 0.0;

  for (std::size_t ep = 0; ep < hyper.episodes; ++ep) {
    const Instance& inst = instances[rng.below(instances.size())];
    std::vector<Observation> observations;
    std::vector<std::vector<Action>> feasible_sets;
    std::vector<Action> actions;
    auto choose = [&](const AssignmentState& state, std::span<const Action> feasible) -> Action {
      Observation obs = observe(state, inst, constraints);
      const auto p = policy.probabilities(obs, feasible);
      Action pick = feasible.back();
      double u = rng.uniform();
      for (Action f : feasible) {
        u -= p[f];
        if (u < 0.0) {
          pick = f;
          break;
        }
      }
      observations.push_back(std::move(obs));
      feasible_sets.emplace_back(feasible.begin(), feasible.end());
      actions.push_back(pick);
      return pick;
    };
    Construction c = construct(inst, constraints, choose);
    const auto* partition = std::get_if<ClusterPartition>(&c.result);
    if (!partition) throw std::invalid_argument("training instance is infeasible");
    if (c.used_fallback) ++result.fallback_episodes;
    const double reward = terminal_reward(*partition, inst, weights, context).reward;

    std::fill(grad.begin(), grad.end(), 0.0);
    const double inv_steps = actions.empty() ? 0.0 : 1.0 / static_cast<double>(actions.size());
    for (std::size_t t = 0; t < actions.size(); ++t) {
      const double advantage = reward - policy.forward(observations[t]).value;
      policy.accumulate_gradient(observations[t], feasible_sets[t], actions[t], advantage, reward,
                                 hyper.entropy_coef, hyper.value_coef, grad);
    }
    const double step = static_cast<double>(ep + 1);
    const double bc1 = 1.0 - std::pow(kBeta1, step), bc2 = 1.0 - std::pow(kBeta2, step);
    auto params = policy.parameters();
    for (std::size_t i = 0; i < n_params; ++i) {
      const double g = grad[i] * inv_steps;
      m1[i] = kBeta1 * m1[i] + (1.0 - kBeta1) * g;
      m2[i] = kBeta2 * m2[i] + (1.0 - kBeta2) * g * g;
      params[i] -= hyper.learning_rate * (m1[i] / bc1) / (std::sqrt(m2[i] / bc2) + kEps);
      if (!std::isfinite(params[i])) {
        throw TrainingDiverged("policy parameter " + std::to_string(i) + " became non-finite at episode " +
                               std::to_string(ep));
      }
    }

    result.rewards.push_back(reward);
    window_sum += reward;
    const std::size_t window = std::max<std::size_t>(1, hyper.moving_average_window);
    if (result.rewards.size() > window) window_sum -= result.rewards[result.rewards.size() - 1 - window];
    result.moving_average.push_back(window_sum /
                                    static_cast<double>(std::min(window, result.rewards.size())));
  }
  return result;
}

void save_policy(std::ostream& out, const PolicyFile& file) {
  const auto& shape = file.policy.shape();
  const auto& w = file.weights;
  std::ostringstream body;
  body.precision(17);
  body << kPolicyMagic << " v" << kPolicyVersion << '\n';
  body << "k_max " << shape.k_max << '\n';
  body << "attention_dim " << shape.attention_dim << '\n';
  body << "hidden " << shape.hidden << '\n';
  body << "episodes " << file.hyper.episodes << '\n';
  body << "learning_rate " << file.hyper.learning_rate << '\n';
  body << "entropy_coef " << file.hyper.entropy_coef << '\n';
  body << "value_coef " << file.hyper.value_coef << '\n';
  body << "seed " << file.hyper.seed << '\n';
  body << "reward_weights " << w.theta_wait << ' ' << w.beta << ' ' << w.gamma << ' ' << w.nu_count
       << ' ' << w.lambda_mix << '\n';
  body << "norm_ranges";
  for (const auto& r : w.norm_ranges) body << ' ' << r.min << ' ' << r.max;
  body << '\n';
  body << "parameters " << file.policy.parameter_count() << '\n';
  for (double p : file.policy.parameters()) body << p << '\n';
  out << body.str();
}

PolicyFile load_policy(std::istream& in) {
  auto fail = [](const std::string& what) -> PolicyFile {
    throw std::runtime_error("malformed policy file: " + what);
  };
  std::string magic, version;
  if (!(in >> magic >> version) || magic != kPolicyMagic) return fail("missing header");
  if (version != "v" + std::to_string(kPolicyVersion)) return fail("unsupported version " + version);
  auto expect = [&](const char* key) {
    std::string k;
    if (!(in >> k) || k != key) throw std::runtime_error(std::string("malformed policy file: expected ") + key);
  };
  PolicyShape shape;
  PolicyFile file;
  expect("k_max");
  in >> shape.k_max;
  expect("attention_dim");
  in >> shape.attention_dim;
  expect("hidden");
  in >> shape.hidden;
  expect("episodes");
  in >> file.hyper.episodes;
  expect("learning_rate");
  in >> file.hyper.learning_rate;
  expect("entropy_coef");
  in >> file.hyper.entropy_coef;
  expect("value_coef");
  in >> file.hyper.value_coef;
  expect("seed");
  in >> file.hyper.seed;
  expect("reward_weights");
  auto& w = file.weights;
  in >> w.theta_wait >> w.beta >> w.gamma >> w.nu_count >> w.lambda_mix;
  expect("norm_ranges");
  for (auto& r : w.norm_ranges) in >> r.min >> r.max;
  expect("parameters");
  std::size_t count = 0;
  in >> count;
  if (!in) return fail("truncated header");
  file.policy = MaskedPolicy(shape, 0);
  if (count != file.policy.parameter_count()) return fail("parameter count does not match shape");
  for (double& p : file.policy.parameters()) {
    if (!(in >> p)) return fail("truncated parameter list");
  }
  return file;
}

}  // namespace crosatfl::starmask
