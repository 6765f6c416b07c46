#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace crosatfl::aggregation {

struct ModelVector {
  std::vector<double> weights;
  double wire_bits = 0.0;

  ModelVector() = default;
  ModelVector(std::vector<double> w, double bits_per_param = 32.0);

  std::size_t dimension() const { return weights.size(); }
  void validate() const;
  bool operator==(const ModelVector&) const = default;
};

struct ClusterModel {
  std::size_t cluster_id = 0;
  ModelVector model;
  double n_total = 0.0;  // samples hosted by all members, skipped or not
};

// Sum of (w_j / sum w) * model_j. Throws on dimension mismatch, negative or
// all-zero weights.
ModelVector weighted_average(std::span<const ModelVector> models, std::span<const double> weights);

// Normalized mixing coefficients used by weighted_average.
std::vector<double> mixing_coefficients(std::span<const double> weights);

// {self} plus a uniform sample of min(k_nbr, |reachable|) distinct reachable
// ids, returned sorted with self first.
std::vector<std::size_t> sample_mixing_group(std::size_t cluster_id,
                                             std::span<const std::size_t> reachable,
                                             std::size_t k_nbr, std::uint64_t stream_seed);

struct MixingRound {
  std::vector<ClusterModel> models;
  std::vector<std::vector<std::size_t>> groups;  // per input position, cluster ids
  std::size_t transmissions = 0;
};

// Simultaneous update against the round-start snapshot. `reachable[p]`
// holds the cluster ids reachable from models[p]. The stream seed is mixed
// with each cluster id so every cluster draws independently.
MixingRound cross_aggregate_round(std::span<const ClusterModel> models,
                                  std::span<const std::vector<std::size_t>> reachable,
                                  std::size_t k_nbr, std::uint64_t round_seed);

ModelVector consolidate_final(std::span<const ClusterModel> models);

// Little-endian: u64 length, f64 wire_bits, then length f64 values.
void write_model(std::ostream& out, const ModelVector& model);
ModelVector read_model(std::istream& in);

}  // namespace crosatfl::aggregation
