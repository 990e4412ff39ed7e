#pragma once

#include <span>
#include <vector>

#include "cedr/matrix.hpp"
#include "cedr/tape.hpp"

namespace cedr::nn {

/// SGD with heavy-ball momentum, L2 weight decay, and a per-epoch cosine
/// learning-rate schedule from lr_max (epoch 0) down to lr_min (epoch T).
struct OptimizerState {
  double lr_max = 0.1;
  double lr_min = 0.001;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int epoch = 0;
  int total_epochs = 1;
  std::vector<Matrix> momentum_buffers;

  /// lr_min + ½(lr_max − lr_min)(1 + cos(π·epoch/T)); T = 0 yields lr_max.
  double learning_rate(int at_epoch) const;
  double learning_rate() const { return learning_rate(epoch); }
};

/// v ← μ·v + g + wd·p;  p ← p − lr(epoch)·v.
/// Momentum buffers are created on first use, one per parameter in order.
void sgd_step(OptimizerState& state, std::span<ParamTensor* const> params);

}  // namespace cedr::nn
