#include "crosatfl/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

#include "crosatfl/rng.hpp"

namespace crosatfl::aggregation {

ModelVector::ModelVector(std::vector<double> w, double bits_per_param)
    : weights(std::move(w)), wire_bits(static_cast<double>(weights.size()) * bits_per_param) {}

void ModelVector::validate() const {
  if (!(wire_bits > 0.0)) throw std::invalid_argument("model wire size must be > 0 bits");
  for (double w : weights) {
    if (!std::isfinite(w)) throw std::invalid_argument("model has a non-finite entry");
  }
}

std::vector<double> mixing_coefficients(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("mixing weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("mixing weights sum to zero");
  std::vector<double> c(weights.begin(), weights.end());
  for (double& x : c) x /= total;
  return c;
}

ModelVector weighted_average(std::span<const ModelVector> models, std::span<const double> weights) {
  if (models.empty()) throw std::invalid_argument("weighted_average needs at least one model");
  if (models.size() != weights.size()) throw std::invalid_argument("one weight per model required");
  const std::size_t dim = models.front().dimension();
  for (const auto& m : models) {
    if (m.dimension() != dim) throw std::invalid_argument("model dimension mismatch");
  }
  const auto coef = mixing_coefficients(weights);
  ModelVector out;
  out.wire_bits = models.front().wire_bits;
  out.weights.assign(dim, 0.0);
  for (std::size_t j = 0; j < models.size(); ++j) {
    if (coef[j] == 0.0) continue;
    for (std::size_t d = 0; d < dim; ++d) out.weights[d] += coef[j] * models[j].weights[d];
  }
  // Equal inputs return the input exactly, not a rounded recombination.
  bool all_equal = true;
  for (const auto& m : models) all_equal = all_equal && m.weights == models.front().weights;
  if (all_equal) out.weights = models.front().weights;
  return out;
}

std::vector<std::size_t> sample_mixing_group(std::size_t cluster_id,
                                             std::span<const std::size_t> reachable,
                                             std::size_t k_nbr, std::uint64_t stream_seed) {
  std::vector<std::size_t> pool(reachable.begin(), reachable.end());
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  if (std::find(pool.begin(), pool.end(), cluster_id) != pool.end()) {
    throw std::invalid_argument("a cluster cannot list itself as reachable");
  }
  const std::size_t take = std::min(k_nbr, pool.size());
  Rng rng(derive_seed(stream_seed, "mixing-group", cluster_id));
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  std::sort(pool.begin(), pool.end());
  pool.insert(pool.begin(), cluster_id);
  return pool;
}

MixingRound cross_aggregate_round(std::span<const ClusterModel> models,
                                  std::span<const std::vector<std::size_t>> reachable,
                                  std::size_t k_nbr, std::uint64_t round_seed) {
  if (reachable.size() != models.size()) throw std::invalid_argument("one reachable set per cluster required");
  std::map<std::size_t, std::size_t> position;
  for (std::size_t p = 0; p < models.size(); ++p) {
    if (!position.emplace(models[p].cluster_id, p).second) throw std::invalid_argument("duplicate cluster id");
  }
  MixingRound round;
  round.models.reserve(models.size());
  for (std::size_t p = 0; p < models.size(); ++p) {
    const auto group = sample_mixing_group(models[p].cluster_id, reachable[p], k_nbr, round_seed);
    std::vector<ModelVector> members;
    std::vector<double> weights;
    for (std::size_t id : group) {
      const auto it = position.find(id);
      if (it == position.end()) throw std::invalid_argument("reachable set names an unknown cluster");
      members.push_back(models[it->second].model);
      weights.push_back(models[it->second].n_total);
    }
    ClusterModel next = models[p];
    next.model = weighted_average(members, weights);
    round.models.push_back(std::move(next));
    round.transmissions += group.size() - 1;
    round.groups.push_back(group);
  }
  return round;
}

ModelVector consolidate_final(std::span<const ClusterModel> models) {
  if (models.empty()) throw std::invalid_argument("consolidation needs at least one cluster");
  std::vector<ModelVector> ms;
  std::vector<double> ws;
  for (const auto& m : models) {
    ms.push_back(m.model);
    ws.push_back(m.n_total);
  }
  return weighted_average(ms, ws);
}

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(sizeof(T) == 8);
  std::uint64_t bits;
  std::memcpy(&bits, &value, 8);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) throw std::runtime_error("truncated model file");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, 8);
  return value;
}

}  // namespace

void write_model(std::ostream& out, const ModelVector& model) {
  put_le<std::uint64_t>(out, model.weights.size());
  put_le<double>(out, model.wire_bits);
  for (double w : model.weights) put_le<double>(out, w);
}

ModelVector read_model(std::istream& in) {
  const auto n = get_le<std::uint64_t>(in);
  if (n > (1ULL << 32)) throw std::runtime_error("implausible model length");
  ModelVector m;
  m.wire_bits = get_le<double>(in);
  m.weights.resize(n);
  for (double& w : m.weights) w = get_le<double>(in);
  return m;
}

}  // namespace crosatfl::aggregation
