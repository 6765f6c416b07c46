#include "crosatfl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "crosatfl/rng.hpp"

namespace crosatfl::aggregation {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double margin(std::span<const double> w, std::span<const double> x) {
  double z = w[x.size()];
  for (std::size_t d = 0; d < x.size(); ++d) z += w[d] * x[d];
  return z;
}

void check_logistic_shape(std::span<const double> w, const Dataset& data) {
  if (w.size() != data.dim + 1) throw std::invalid_argument("logistic model must have dim + 1 entries");
}

}  // namespace

TrainerKind trainer_kind_from_string(std::string_view name) {
  if (name == "quadratic") return TrainerKind::Quadratic;
  if (name == "logistic") return TrainerKind::Logistic;
  throw std::invalid_argument("unknown trainer kind '" + std::string(name) + "'");
}

std::string_view to_string(TrainerKind kind) {
  return kind == TrainerKind::Quadratic ? "quadratic" : "logistic";
}

Partitioning partitioning_from_string(std::string_view name) {
  if (name == "iid") return Partitioning::IID;
  if (name == "label_skew") return Partitioning::LabelSkew;
  throw std::invalid_argument("unknown partitioning '" + std::string(name) + "'");
}

std::string_view to_string(Partitioning p) { return p == Partitioning::IID ? "iid" : "label_skew"; }

void TrainerSpec::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (kind == TrainerKind::Logistic && !data) throw std::invalid_argument("logistic trainer needs a dataset");
}

double logistic_loss(std::span<const double> w, const Dataset& data) {
  check_logistic_shape(w, data);
  if (data.size() == 0) return 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double z = margin(w, data.row(i));
    // log(1 + e^z) - y z, computed stably.
    loss += std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - data.y[i] * z;
  }
  return loss / static_cast<double>(data.size());
}

double accuracy(std::span<const double> w, const Dataset& data) {
  check_logistic_shape(w, data);
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int pred = margin(w, data.row(i)) >= 0.0 ? 1 : 0;
    correct += pred == data.y[i];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double local_loss(const ModelVector& model, const TrainerSpec& spec) {
  if (spec.kind == TrainerKind::Quadratic) {
    if (spec.target.size() != model.dimension()) throw std::invalid_argument("target dimension mismatch");
    double s = 0.0;
    for (std::size_t d = 0; d < model.dimension(); ++d) {
      const double diff = model.weights[d] - spec.target[d];
      s += diff * diff;
    }
    return s;
  }
  return logistic_loss(model.weights, *spec.data);
}

ModelVector local_train(const ModelVector& model, const TrainerSpec& spec, int epochs) {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  spec.validate();
  ModelVector w = model;
  if (epochs == 0) return w;
  if (spec.kind == TrainerKind::Quadratic) {
    if (spec.target.size() != w.dimension()) throw std::invalid_argument("target dimension mismatch");
    for (int e = 0; e < epochs; ++e) {
      for (std::size_t d = 0; d < w.dimension(); ++d) {
        w.weights[d] -= spec.learning_rate * 2.0 * (w.weights[d] - spec.target[d]);
      }
      if (!std::isfinite(local_loss(w, spec))) throw NonFiniteLoss("quadratic loss became non-finite");
    }
    return w;
  }
  const Dataset& data = *spec.data;
  check_logistic_shape(w.weights, data);
  const std::size_t n = data.size();
  if (n == 0) return w;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(spec.seed, "local-train"));
  std::vector<double> grad(data.dim + 1);
  for (int e = 0; e < epochs; ++e) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t start = 0; start < n; start += spec.batch_size) {
      const std::size_t stop = std::min(n, start + spec.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < stop; ++b) {
        const auto x = data.row(order[b]);
        const double err = sigmoid(margin(w.weights, x)) - data.y[order[b]];
        for (std::size_t d = 0; d < data.dim; ++d) grad[d] += err * x[d];
        grad[data.dim] += err;
      }
      const double scale = spec.learning_rate / static_cast<double>(stop - start);
      for (std::size_t d = 0; d <= data.dim; ++d) w.weights[d] -= scale * grad[d];
    }
    if (!std::isfinite(logistic_loss(w.weights, data))) {
      throw NonFiniteLoss("logistic loss became non-finite in epoch " + std::to_string(e));
    }
  }
  return w;
}

std::vector<double> centralized_logistic(const Dataset& data, int iterations, double ridge) {
  const std::size_t p = data.dim + 1;
  std::vector<double> w(p, 0.0);
  std::vector<double> hess(p * p), grad(p), xi(p);
  for (int it = 0; it < iterations; ++it) {
    std::fill(hess.begin(), hess.end(), 0.0);
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto x = data.row(i);
      std::copy(x.begin(), x.end(), xi.begin());
      xi[data.dim] = 1.0;
      const double mu = sigmoid(margin(w, x));
      const double s = mu * (1.0 - mu);
      for (std::size_t a = 0; a < p; ++a) {
        grad[a] += (mu - data.y[i]) * xi[a];
        for (std::size_t b = 0; b < p; ++b) hess[a * p + b] += s * xi[a] * xi[b];
      }
    }
    for (std::size_t a = 0; a < p; ++a) {
      grad[a] += ridge * w[a];
      hess[a * p + a] += ridge;
    }
    // Solve hess * step = grad by Gaussian elimination with partial pivoting.
    std::vector<double> m = hess, rhs = grad;
    for (std::size_t col = 0; col < p; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < p; ++r) {
        if (std::abs(m[r * p + col]) > std::abs(m[piv * p + col])) piv = r;
      }
      if (piv != col) {
        for (std::size_t c = 0; c < p; ++c) std::swap(m[col * p + c], m[piv * p + c]);
        std::swap(rhs[col], rhs[piv]);
      }
      const double d = m[col * p + col];
      if (d == 0.0) throw std::runtime_error("singular Hessian in reference solver");
      for (std::size_t r = col + 1; r < p; ++r) {
        const double f = m[r * p + col] / d;
        for (std::size_t c = col; c < p; ++c) m[r * p + c] -= f * m[col * p + c];
        rhs[r] -= f * rhs[col];
      }
    }
    std::vector<double> step(p);
    for (std::size_t r = p; r-- > 0;) {
      double s = rhs[r];
      for (std::size_t c = r + 1; c < p; ++c) s -= m[r * p + c] * step[c];
      step[r] = s / m[r * p + r];
    }
    double norm = 0.0;
    for (std::size_t a = 0; a < p; ++a) {
      w[a] -= step[a];
      norm += step[a] * step[a];
    }
    if (std::sqrt(norm) < 1e-12) break;
  }
  return w;
}

SyntheticTask make_synthetic_task(std::span<const std::int64_t> samples_per_client,
                                  const SyntheticTaskSpec& spec) {
  if (spec.dim < 1) throw std::invalid_argument("synthetic task needs dim >= 1");
  Rng dir_rng(derive_seed(spec.seed, "direction"));
  std::vector<double> dir(spec.dim);
  double norm = 0.0;
  for (double& d : dir) {
    d = dir_rng.normal();
    norm += d * d;
  }
  norm = std::sqrt(norm);
  for (double& d : dir) d /= norm;

  auto draw = [&](Rng& rng, int label, Dataset& into) {
    const double sign = label == 1 ? 1.0 : -1.0;
    for (std::size_t d = 0; d < spec.dim; ++d) into.x.push_back(sign * spec.separation * dir[d] + rng.normal());
    into.y.push_back(label);
  };

  SyntheticTask task;
  task.pooled.dim = task.test.dim = spec.dim;
  for (std::size_t c = 0; c < samples_per_client.size(); ++c) {
    Rng rng(derive_seed(spec.seed, "client-data", c));
    double positive = 0.5;
    if (spec.partitioning == Partitioning::LabelSkew) {
      const double u = rng.uniform(0.0, 0.15);
      positive = rng.uniform() < 0.5 ? u : 1.0 - u;
    }
    auto shard = std::make_shared<Dataset>();
    shard->dim = spec.dim;
    for (std::int64_t i = 0; i < samples_per_client[c]; ++i) {
      draw(rng, rng.uniform() < positive ? 1 : 0, *shard);
    }
    task.pooled.x.insert(task.pooled.x.end(), shard->x.begin(), shard->x.end());
    task.pooled.y.insert(task.pooled.y.end(), shard->y.begin(), shard->y.end());
    task.clients.push_back(std::move(shard));
  }
  Rng test_rng(derive_seed(spec.seed, "test-data"));
  for (std::size_t i = 0; i < spec.test_samples; ++i) draw(test_rng, test_rng.uniform() < 0.5 ? 1 : 0, task.test);
  return task;
}

}  // namespace crosatfl::aggregation
