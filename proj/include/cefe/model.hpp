#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cefe/features.hpp"
#include "cefe/loss.hpp"
#include "cefe/rng.hpp"
#include "cefe/types.hpp"

namespace cefe::model {

struct LabeledFeature {
  FeatureVector features;
  int target = 0;
};

// Linear softmax classifier over hashed features.
struct SoftmaxModel {
  int k = 0;
  std::size_t dim = 0;
  std::vector<double> weights;  // k rows of dim, row-major
  std::vector<double> bias;     // k

  static SoftmaxModel zeros(int k, std::size_t dim);

  bool operator==(const SoftmaxModel&) const = default;
};

// softmax(Wx + b), computed with the max-logit shift. Throws
// CefeError(Shape) when x.dim != model.dim.
ProbDist predict(const SoftmaxModel& model, const FeatureVector& x);

// Gradient of the mean SCE loss over a batch, same shapes as the model.
struct Gradient {
  std::vector<double> weights;
  std::vector<double> bias;
};

// Throws CefeError(EmptyInput) on an empty batch.
Gradient grad_sce(const SoftmaxModel& model, const std::vector<LabeledFeature>& batch,
                  const SCEConfig& cfg);

double mean_sce_loss(const SoftmaxModel& model, const std::vector<LabeledFeature>& data,
                     const SCEConfig& cfg);

// Duplicates minority-class items (sampling with replacement) until every
// class count equals the majority count. Original items stay in place;
// duplicates are appended. Throws CefeError(MissingClass) when any of the k
// classes is absent.
std::vector<LabeledFeature> oversample(const std::vector<LabeledFeature>& items, int k,
                                       Rng& rng);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
  bool oversample = false;

  // epochs >= 1, batch_size >= 1, learning_rate > 0; CefeError(Config) otherwise.
  void validate() const;
};

struct TrainResult {
  SoftmaxModel model;
  // Mean SCE loss over the full (possibly oversampled) training set,
  // measured after each epoch.
  std::vector<double> loss_trace;
};

// Mini-batch gradient descent from zero weights. Deterministic given the
// seed. Data must be non-empty with every target in [0, k) and at least two
// classes present (CefeError(MissingClass) otherwise).
TrainResult train(const std::vector<LabeledFeature>& data, int k, const TrainConfig& tc,
                  const SCEConfig& sce);

// Warm start: continues from an existing model's weights (pre-train on one
// corpus, then fine-tune on another).
TrainResult train(SoftmaxModel warm_start, const std::vector<LabeledFeature>& data,
                  const TrainConfig& tc, const SCEConfig& sce);

// Checkpoint file: one JSON header line {format, version, k, dim, seed, sce}
// followed by the weight and bias payload as little-endian doubles.
struct Checkpoint {
  SoftmaxModel model;
  SCEConfig sce;
  std::uint64_t seed = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Compares analytic gradients against central finite differences on random
// small models (k <= 4, dim <= 64).
struct GradCheckReport {
  int trials = 0;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

GradCheckReport gradcheck(int trials, std::uint64_t seed, double tolerance = 1e-5);

}  // namespace cefe::model
