#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fedpkt/features.hpp"
#include "fedpkt/metrics.hpp"

namespace fedpkt {

// Homogeneous linear model over the multi-hot feature space (no bias term).
struct SvmModel {
  std::vector<double> weights;
  std::uint64_t vocab_fingerprint = 0;
  int trained_rounds = 0;

  static SvmModel zeros(std::size_t dimension, std::uint64_t vocab_fingerprint = 0) {
    return {std::vector<double>(dimension, 0.0), vocab_fingerprint, 0};
  }
  std::size_t dimension() const { return weights.size(); }

  bool operator==(const SvmModel&) const = default;
};

// Dimension and vocabulary fingerprint every model of one experiment shares.
struct FeatureSpace {
  std::size_t dimension = 0;
  std::uint64_t fingerprint = 0;

  static FeatureSpace of(const Vocabulary& vocab) { return {vocab.size(), vocab.fingerprint()}; }
};

struct Hyperparams {
  double eta = 0.1;
  double lambda = 0.0;
  std::optional<std::size_t> batch_size;  // nullopt: one batch of all data
  int epochs = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

using SparseVector = std::vector<std::pair<std::uint32_t, double>>;

// w . x for a multi-hot x.
double dot(std::span<const double> weights, std::span<const std::uint32_t> indices);

double hinge_loss(const SvmModel& model, const EncodedExample& example);

// -y on the support when y (w . x) < 1, otherwise empty. The regularizer's
// gradient is not included.
SparseVector subgradient(const SvmModel& model, const EncodedExample& example);

// E epochs of seeded shuffle + minibatch steps
//   w <- w + eta/|b| * sum_{i in b, y_i w.x_i < 1} y_i x_i,  then w <- (1 - 2 eta lambda) w.
// Margins inside a batch are taken at the weights from the start of the batch.
SvmModel client_update(const SvmModel& model, std::span<const EncodedExample> examples,
                       const Hyperparams& hyper);

// client_update from w = 0 with `passes` epochs over the pooled data.
SvmModel train_centralized(std::span<const EncodedExample> examples, std::size_t dimension,
                           const Hyperparams& hyper, int passes,
                           std::uint64_t vocab_fingerprint = 0);

// sign(w . x), with w . x = 0 predicting -1.
int predict(const SvmModel& model, std::span<const std::uint32_t> indices);
inline int predict(const SvmModel& model, const EncodedExample& example) {
  return predict(model, example.indices);
}

EvalReport evaluate(const SvmModel& model, std::span<const EncodedExample> examples,
                    std::string eval_set_name = {});

struct Coefficients {
  std::vector<std::pair<Feature, double>> positive;  // largest first
  std::vector<std::pair<Feature, double>> negative;  // most negative first
};

// Up to k strictly positive and k strictly negative weights, each ordered by
// |weight| descending with ties broken by feature order.
Coefficients top_coefficients(const SvmModel& model, const Vocabulary& vocab, std::size_t k);

void write_coefficients_csv(const Coefficients& coefficients, std::ostream& out);

// Binary model file, little-endian:
//   "FPKTSVM1" | u64 fingerprint | f64 eta | f64 lambda | u64 batch (0 = all)
//   | u64 epochs | u64 seed | u64 trained_rounds | u64 dimension | f64 weights[dimension]
void write_model(const SvmModel& model, const Hyperparams& hyper, std::ostream& out);
std::pair<SvmModel, Hyperparams> read_model(std::istream& in);

}  // namespace fedpkt
