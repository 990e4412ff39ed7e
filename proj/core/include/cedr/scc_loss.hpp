#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cedr/matrix.hpp"
#include "cedr/pair_weights.hpp"
#include "cedr/tape.hpp"

namespace cedr {

/// Probability floor inside the cross-entropy log.
inline constexpr double kCrossEntropyEpsilon = 1e-12;

/// Mean over the batch of −ln max(probs[i, label_i], ε).
double cross_entropy(const nn::Matrix& probs, std::span<const int> labels);
nn::Var cross_entropy(nn::Tape& tape, nn::Var probs, std::span<const int> labels);

/// True when some sample shares its label with another sample.
bool has_positive_pair(std::span<const int> labels);

struct InfonceOptions {
  double temperature = 1.0;
};

struct InfonceResult {
  /// Loss per anchor; 0 for anchors without positives.
  std::vector<double> per_anchor;
  /// Mean over anchors that have at least one positive.
  double mean = 0.0;
  std::size_t skipped_anchors = 0;
  /// d(mean)/d(embeddings), weights held constant.
  nn::Matrix grad;
};

/// Supervised InfoNCE over a batch of unit embeddings.
///
/// For anchor i with positives P_i and negatives N_i, similarities
/// s_ij = z_i·z_j / τ, and pair weights w (all 1 when `weights` is null):
///
///   neg_i = |N_i| · Σ_k w_ik e^{s_ik} / Σ_k w_ik
///   L_i   = (1/|P_i|) Σ_{j∈P_i} −log( w⁺_ij e^{s_ij} / (w⁺_ij e^{s_ij} + neg_i) )
///
/// Scaling every negative weight by a common constant leaves L_i unchanged.
/// Anchors without positives are skipped and counted; a batch in which
/// every anchor is skipped throws InvalidInput("degenerate batch ...").
InfonceResult supervised_infonce(const nn::Matrix& embeddings, std::span<const int> labels,
                                 const PairWeightMatrix* weights, const InfonceOptions& options);

struct InfonceVars {
  nn::Var mean;
  std::vector<double> per_anchor;
  std::size_t skipped_anchors = 0;
};

/// Tape version. When `anchor_probs` is given, each anchor's loss is
/// multiplied by its predicted probability of the true class before
/// averaging, and gradient flows into those probabilities too.
InfonceVars supervised_infonce(nn::Tape& tape, nn::Var embeddings, std::span<const int> labels,
                               const PairWeightMatrix* weights, const InfonceOptions& options,
                               const nn::Var* anchor_probs = nullptr);

struct LossBreakdown {
  double ce = 0.0;
  double nce = 0.0;
  double lambda = 0.0;
  double total = 0.0;
  std::vector<double> per_anchor;
  std::size_t skipped_anchors = 0;
};

/// total = ce + λ·nce. Throws InvalidInput for λ < 0.
LossBreakdown joint_loss(double ce, double nce, double lambda);

/// Constant λ, or a linear ramp from `start` (first epoch) to `end` (last epoch).
struct LambdaSchedule {
  double start = 0.1;
  double end = 0.1;
  bool linear = false;

  static LambdaSchedule constant(double value) { return {value, value, false}; }
  static LambdaSchedule ramp(double from, double to) { return {from, to, true}; }

  double at(int epoch, int total_epochs) const;
};

}  // namespace cedr
