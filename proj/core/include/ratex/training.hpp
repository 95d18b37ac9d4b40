#pragma once

// Parameter initialisation, optimisers, the epoch loop and dataset-level
// prediction and evaluation.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ratex/data.hpp"
#include "ratex/metrics.hpp"
#include "ratex/model.hpp"

namespace ratex {

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct TrainConfig {
  std::size_t epochs = 20;
  double learning_rate = 1e-3;
  std::size_t batch_size = 8;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::uint64_t seed = 1;
  std::size_t repeats = 3;

  void validate() const;
};

/// Xavier-uniform weights, zero biases, unit layer-norm gains. Embedding rows
/// use fan_in 1 and fan_out h.
ModelParams init_params(const ModelConfig& cfg, std::size_t vocab_size, std::uint64_t seed);

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, std::vector<Var> params);

  /// Applies the accumulated gradients, then leaves them untouched.
  void step();
  void zero_grad();

 private:
  OptimizerKind kind_;
  double lr_;
  std::vector<Var> params_;
  std::vector<Tensor> m_, v_;
  std::uint64_t t_ = 0;
};

/// Raised when a document's loss stops being finite.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpochStats {
  double mean_loss = 0.0;  // mean per-document total loss
  double seconds = 0.0;    // forward, backward and optimiser steps only
};

/// One pass over `train` in an order shuffled from (seed, epoch). Gradients
/// are averaged over each batch.
EpochStats train_epoch(const ModelConfig& cfg, const ModelParams& params, Optimizer& optimizer,
                       const Dataset& train, const std::vector<EncodedDocument>& encoded, const TrainConfig& tcfg,
                       std::size_t epoch);

struct NamedTensor {
  std::string name;
  Tensor value;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

std::vector<NamedTensor> snapshot(const ModelParams& params);
/// Copies a snapshot back into `params`; names and shapes must match exactly.
void restore(const ModelParams& params, const std::vector<NamedTensor>& tensors);

struct Checkpoint {
  std::size_t epoch = 1;  // 1-based
  std::vector<NamedTensor> tensors;
  EvalReport dev_report;
  double seconds = 0.0;
};

/// Highest dev document F1, earliest epoch on ties. Throws on empty input.
const Checkpoint& select_checkpoint(const std::vector<Checkpoint>& checkpoints);

/// Frozen-parameter inference over every document.
std::vector<Prediction> predict_dataset(const ModelConfig& cfg, const ModelParams& params, const Dataset& dataset,
                                        const std::vector<EncodedDocument>& encoded);

/// Report of model predictions against gold labels: documents at y_hat > 0.5,
/// tokens at the fixed 0.5 score threshold. Token metrics need token labels.
EvalReport evaluate_predictions(const Dataset& dataset, const std::vector<Prediction>& predictions,
                                LossVariant variant, double k_percent);

/// Report of raw token scores classified by top-k%. Document F1 is absent and
/// coverage is zero since nothing is trained.
EvalReport evaluate_token_scores(const Dataset& dataset, const std::vector<std::vector<double>>& scores,
                                 double k_percent);

std::vector<EncodedDocument> encode_dataset(const Dataset& dataset, const Vocab& vocab);

struct RunResult {
  std::vector<Checkpoint> history;  // one per epoch
  std::size_t best = 0;             // index into history
  double mean_seconds_per_epoch = 0.0;
};

using EpochCallback = std::function<void(std::size_t epoch, const EpochStats&, const EvalReport& dev)>;

/// Trains for tcfg.epochs from init_params(seed), evaluating on `dev` after
/// every epoch. `params` ends holding the selected checkpoint.
RunResult train_run(const ModelConfig& cfg, ModelParams& params, const Dataset& train, const Dataset& dev,
                    const Vocab& vocab, const TrainConfig& tcfg, std::uint64_t seed,
                    const EpochCallback& on_epoch = {});

}  // namespace ratex
