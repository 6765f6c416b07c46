#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "crosatfl/aggregation.hpp"

namespace crosatfl::aggregation {

enum class TrainerKind { Quadratic, Logistic };

TrainerKind trainer_kind_from_string(std::string_view name);
std::string_view to_string(TrainerKind kind);

// Binary classification data, row-major features.
struct Dataset {
  std::size_t dim = 0;
  std::vector<double> x;
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * dim, dim}; }
};

struct TrainerSpec {
  TrainerKind kind = TrainerKind::Logistic;
  // Quadratic: local objective ||w - target||^2.
  std::vector<double> target;
  // Logistic: the satellite's shard.
  std::shared_ptr<const Dataset> data;
  double learning_rate = 0.1;
  std::size_t batch_size = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// `epochs` full passes of mini-batch gradient descent; shuffling is seeded by
// spec.seed. Quadratic objectives take one full-gradient step per epoch.
ModelVector local_train(const ModelVector& model, const TrainerSpec& spec, int epochs);

double local_loss(const ModelVector& model, const TrainerSpec& spec);

// Logistic model layout: dim weights followed by the bias.
double logistic_loss(std::span<const double> w, const Dataset& data);
double accuracy(std::span<const double> w, const Dataset& data);

// Full-batch Newton iterations on the pooled data (tiny ridge for
// separable sets).
std::vector<double> centralized_logistic(const Dataset& data, int iterations = 50,
                                         double ridge = 1e-6);

enum class Partitioning { IID, LabelSkew };

Partitioning partitioning_from_string(std::string_view name);
std::string_view to_string(Partitioning p);

struct SyntheticTaskSpec {
  std::size_t dim = 10;
  // Class means sit at +/- separation along a random unit direction.
  double separation = 1.25;
  Partitioning partitioning = Partitioning::IID;
  std::size_t test_samples = 2000;
  std::uint64_t seed = 0;
};

struct SyntheticTask {
  std::vector<std::shared_ptr<const Dataset>> clients;
  Dataset pooled;
  Dataset test;
};

SyntheticTask make_synthetic_task(std::span<const std::int64_t> samples_per_client,
                                  const SyntheticTaskSpec& spec);

}  // namespace crosatfl::aggregation
