#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "entsep/corpus.hpp"
#include "entsep/embeddings.hpp"

namespace entsep {

struct ProbeConfig {
  double learning_rate = 1e-3;  // constant
  std::size_t batch_size = 1024;
  std::size_t max_epochs = 1000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // Early stopping on the epoch's mean training loss.
  std::size_t patience = 10;
  double min_delta = 1e-4;
  double test_fraction = 0.2;
  std::size_t folds = 3;

  void Validate() const;
};

// Reads a JSON object whose keys override the defaults.
ProbeConfig LoadProbeConfig(const std::string& path);

// Single linear layer: logits = W x + b.
struct ProbeModel {
  std::vector<EntityId> classes;  // sorted
  Eigen::MatrixXd weights;        // classes x dim
  Eigen::VectorXd bias;           // classes

  std::uint32_t Predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

// Mean softmax cross-entropy over the rows; fills the gradients when given.
double CrossEntropy(const ProbeModel& m, const Eigen::MatrixXd& x,
                    std::span<const std::uint32_t> y, Eigen::MatrixXd* grad_w = nullptr,
                    Eigen::VectorXd* grad_b = nullptr);

struct TrainStats {
  std::size_t epochs_run = 0;
  std::vector<double> epoch_loss;
  bool early_stopped = false;
};

// Adam on mini-batches in a seeded shuffle order, starting from zero weights.
// Throws NumericError on a non-finite loss.
ProbeModel TrainSoftmax(const Eigen::MatrixXd& x, std::span<const std::uint32_t> y,
                        std::vector<EntityId> classes, const ProbeConfig& cfg,
                        std::uint64_t seed, TrainStats* stats = nullptr);

struct ProbeResult {
  ProbeModel model;
  double test_f1 = 0.0;        // micro (= accuracy)
  double test_macro_f1 = 0.0;
  std::vector<double> fold_f1s;        // micro, per CV fold
  std::vector<double> fold_macro_f1s;
  double train_f1 = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  TrainStats stats;  // of the final model
};

// Stratified 80/20 split, k-fold stratified CV on the training part, final
// model on the whole training part scored on the held-out part.
ProbeResult TrainProbe(const EmbeddingMatrix& x, std::span<const EntityId> labels,
                       const ProbeConfig& cfg, std::uint64_t seed);

// Micro-F1 (accuracy). Labels unknown to the model count as errors.
double EvalProbe(const ProbeModel& m, const EmbeddingMatrix& x, std::span<const EntityId> labels);
// Macro-F1 over the model's classes present in the labels or predictions.
double EvalProbeMacro(const ProbeModel& m, const EmbeddingMatrix& x,
                      std::span<const EntityId> labels);

std::vector<EntityId> Labels(const Corpus& c);

}  // namespace entsep
