#include "cedr/optimizer.hpp"

#include <cmath>
#include <numbers>

#include "cedr/error.hpp"

namespace cedr::nn {

double OptimizerState::learning_rate(int at_epoch) const {
  if (total_epochs <= 0) return lr_max;
  if (at_epoch < 0 || at_epoch > total_epochs) {
    throw InvalidInput("epoch " + std::to_string(at_epoch) + " outside [0, " +
                       std::to_string(total_epochs) + "]");
  }
  const double progress = static_cast<double>(at_epoch) / total_epochs;
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * progress));
}

void sgd_step(OptimizerState& state, std::span<ParamTensor* const> params) {
  if (state.momentum_buffers.empty()) {
    for (const ParamTensor* p : params) {
      state.momentum_buffers.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  if (state.momentum_buffers.size() != params.size()) {
    throw ShapeError("optimizer tracks " + std::to_string(state.momentum_buffers.size()) +
                     " buffers but got " + std::to_string(params.size()) + " parameters");
  }
  const double lr = state.learning_rate();
  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamTensor& p = *params[i];
    Matrix& v = state.momentum_buffers[i];
    if (!p.grad.same_shape(p.value) || !v.same_shape(p.value)) {
      throw ShapeError("sgd_step: parameter '" + p.name + "' has value " +
                       p.value.shape_string() + ", grad " + p.grad.shape_string() +
                       ", momentum " + v.shape_string());
    }
    auto pv = p.value.values();
    const auto g = p.grad.values();
    auto vb = v.values();
    for (std::size_t k = 0; k < pv.size(); ++k) {
      vb[k] = state.momentum * vb[k] + g[k] + state.weight_decay * pv[k];
      pv[k] -= lr * vb[k];
    }
  }
}

}  // namespace cedr::nn
