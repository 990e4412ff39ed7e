#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cedr/config.hpp"
#include "cedr/cpcm.hpp"
#include "cedr/dataset.hpp"
#include "cedr/eaa.hpp"
#include "cedr/encoder.hpp"
#include "cedr/error.hpp"
#include "cedr/metrics.hpp"
#include "cedr/pair_weights.hpp"

namespace cedr {

/// Pair weights for one batch under `arm`, computed from forward values
/// (no gradient flows through them). Returns nullopt for unit weights
/// (arms ce_only and scc, or when config.unit_weights is set).
/// `running` is required when config.center_scope is running.
std::optional<PairWeightMatrix> arm_pair_weights(const ExperimentConfig& config, Arm arm,
                                                 const nn::Matrix& probs,
                                                 const nn::Matrix& embeddings,
                                                 std::span<const int> labels,
                                                 RunningCenters* running = nullptr);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double lambda = 0.0;
  double ce = 0.0;     // batch means, averaged over batches
  double nce = 0.0;
  double total = 0.0;
  std::size_t batches = 0;
  std::size_t skipped_anchors = 0;
  std::size_t degenerate_batches = 0;
};

struct EvalSummary {
  int after_epoch = 0;  // 0 = before training
  double overall_acc = 0.0;
  double avg_class_acc = 0.0;
  double macro_f1 = 0.0;
  double test_ce = 0.0;
};

struct EntropyStats {
  double mean_correct = 0.0;
  double mean_wrong = 0.0;
  std::size_t n_correct = 0;
  std::size_t n_wrong = 0;
  double min = 0.0;
  double max = 0.0;
  std::size_t outliers = 0;
  std::size_t unstable = 0;
};

struct RunRecord {
  ExperimentConfig config;
  std::vector<EpochRecord> epochs;
  std::vector<EvalSummary> evals;  // initial evaluation, then one per epoch
  EvalReport final_report;
  CenterDistanceReport centers;    // on the test split's embeddings
  EntropyStats entropy;            // on the test split
  double wall_time_s = 0.0;

  /// Deterministic JSON. Wall time is left out unless `include_timing`.
  std::string to_json(bool include_timing = true) const;
};

/// Raised when a batch loss is not finite. Carries the weights at that point.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& what, int epoch, std::size_t batch,
                   std::vector<nn::NamedTensor> weights)
      : NumericError(what), epoch_(epoch), batch_(batch), weights_(std::move(weights)) {}
  int epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }
  const std::vector<nn::NamedTensor>& weights() const { return weights_; }

 private:
  int epoch_;
  std::size_t batch_;
  std::vector<nn::NamedTensor> weights_;
};

/// Outputs of the encoder over a whole sample list, evaluated in chunks.
struct SplitOutputs {
  nn::Matrix probs;
  nn::Matrix embeddings;
  std::vector<int> labels;
};
SplitOutputs encode_samples(const Encoder& encoder, std::span<const PointCloudSample> samples,
                            std::size_t chunk = 64);

/// Loss of one batch recorded on a tape, for training and gradient checks.
struct BatchLoss {
  nn::Var total;
  LossBreakdown breakdown;
  bool degenerate = false;
};

/// Builds CE (+ λ·NCE for contrastive arms) on `tape` from a recorded
/// forward pass. `weights` null means unit weights.
BatchLoss batch_loss(nn::Tape& tape, const ForwardVars& forward, std::span<const int> labels,
                     const ExperimentConfig& config, Arm arm, double lambda,
                     const PairWeightMatrix* weights);

class Trainer {
 public:
  Trainer(ExperimentConfig config, const DatasetSplit& data);

  /// Runs the configured number of epochs. Throws TrainingDiverged.
  RunRecord run();
  const Encoder& encoder() const { return encoder_; }

 private:
  EvalSummary evaluate_split(int after_epoch) const;

  ExperimentConfig config_;
  const DatasetSplit& data_;
  Encoder encoder_;
};

/// Convenience wrapper: Trainer(config, data).run(), optionally saving the model.
RunRecord train(const ExperimentConfig& config, const DatasetSplit& data,
                Encoder* trained = nullptr);

/// Loads config.data_dir if set, otherwise synthesizes from config.data.
DatasetSplit load_or_build_dataset(const ExperimentConfig& config);

}  // namespace cedr
