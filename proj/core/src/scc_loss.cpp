#include "cedr/scc_loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "cedr/error.hpp"

namespace cedr {

using nn::Matrix;
using nn::Tape;
using nn::Var;

PairWeightMatrix PairWeightMatrix::unit(std::span<const int> labels) {
  const std::size_t b = labels.size();
  return PairWeightMatrix{Matrix(b, b, 1.0), Matrix(b, b, 1.0),
                          std::vector<int>(labels.begin(), labels.end()), Source::unit};
}

void PairWeightMatrix::validate() const {
  const std::size_t b = labels.size();
  if (w_pos.rows() != b || w_pos.cols() != b || w_neg.rows() != b || w_neg.cols() != b) {
    throw InvalidInput("pair weights " + w_pos.shape_string() + "/" + w_neg.shape_string() +
                       " do not match a batch of " + std::to_string(b));
  }
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const double w = is_negative_pair(i, j) ? w_neg(i, j) : (i != j ? w_pos(i, j) : 1.0);
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw InvalidInput("pair weight (" + std::to_string(i) + "," + std::to_string(j) +
                           ") = " + std::to_string(w) + " is not a positive finite value");
      }
    }
  }
}

const char* to_string(PairWeightMatrix::Source source) {
  switch (source) {
    case PairWeightMatrix::Source::unit: return "unit";
    case PairWeightMatrix::Source::cpcm: return "cpcm";
    case PairWeightMatrix::Source::eaa: return "eaa";
    case PairWeightMatrix::Source::fused: return "fused";
  }
  return "?";
}

namespace {

void check_labels(std::span<const int> labels, std::size_t rows, std::size_t num_classes) {
  if (labels.size() != rows) {
    throw ShapeError(std::to_string(labels.size()) + " labels for " + std::to_string(rows) +
                     " rows");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw InvalidInput("label " + std::to_string(labels[i]) + " of sample " + std::to_string(i) +
                         " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

// Per-anchor losses and, if `grad` is non-null, the gradient of
// Σ_i coeff[i]·L_i with respect to the embeddings.
InfonceResult infonce_core(const Matrix& z, std::span<const int> labels,
                           const PairWeightMatrix* weights, double tau,
                           const std::vector<double>* coeff, Matrix* grad) {
  const std::size_t b = z.rows();
  if (labels.size() != b) {
    throw ShapeError(std::to_string(labels.size()) + " labels for " + std::to_string(b) +
                     " embeddings");
  }
  if (b < 2) throw InvalidInput("contrastive batch needs at least 2 samples");
  if (!(tau > 0.0)) throw InvalidInput("temperature must be positive");
  if (weights != nullptr) {
    weights->validate();
    if (!std::equal(labels.begin(), labels.end(), weights->labels.begin(), weights->labels.end())) {
      throw InvalidInput("pair weights were built for a different label set");
    }
  }
  auto wpos = [&](std::size_t i, std::size_t j) { return weights ? weights->w_pos(i, j) : 1.0; };
  auto wneg = [&](std::size_t i, std::size_t j) { return weights ? weights->w_neg(i, j) : 1.0; };

  InfonceResult res;
  res.per_anchor.assign(b, 0.0);
  Matrix sim(b, b);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      double d = 0.0;
      for (std::size_t c = 0; c < z.cols(); ++c) d += z(i, c) * z(j, c);
      sim(i, j) = d / tau;
    }
  }

  Matrix gsim;  // d(objective)/d(sim)
  if (grad != nullptr) gsim = Matrix(b, b);

  std::vector<double> e(b);
  std::size_t valid = 0;
  for (std::size_t i = 0; i < b; ++i) {
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      (labels[j] == labels[i] ? n_pos : n_neg)++;
      m = std::max(m, sim(i, j));
    }
    if (n_pos == 0) {
      ++res.skipped_anchors;
      continue;
    }
    ++valid;
    if (n_neg == 0) continue;  // −log 1 for every positive

    double neg_mass = 0.0;
    double neg_wsum = 0.0;
    for (std::size_t k = 0; k < b; ++k) {
      e[k] = k == i ? 0.0 : std::exp(sim(i, k) - m);
      if (labels[k] != labels[i]) {
        neg_mass += wneg(i, k) * e[k];
        neg_wsum += wneg(i, k);
      }
    }
    const double neg_term = static_cast<double>(n_neg) * neg_mass / neg_wsum;

    double loss = 0.0;
    double inv_d_sum = 0.0;
    const double c = coeff ? (*coeff)[i] / static_cast<double>(n_pos) : 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      if (!(j != i && labels[j] == labels[i])) continue;
      const double a = wpos(i, j) * e[j];
      const double d = a + neg_term;
      loss += std::log(d) - std::log(a);
      if (grad != nullptr) {
        gsim(i, j) += c * (a / d - 1.0);
        inv_d_sum += 1.0 / d;
      }
    }
    res.per_anchor[i] = loss / static_cast<double>(n_pos);
    if (grad != nullptr) {
      const double scale = c * static_cast<double>(n_neg) / neg_wsum * inv_d_sum;
      for (std::size_t k = 0; k < b; ++k) {
        if (labels[k] != labels[i]) gsim(i, k) += scale * wneg(i, k) * e[k];
      }
    }
  }
  if (valid == 0) {
    throw InvalidInput("degenerate batch: no anchor has a positive among " + std::to_string(b) +
                       " samples");
  }
  double total = 0.0;
  for (double l : res.per_anchor) total += l;
  res.mean = total / static_cast<double>(valid);

  if (grad != nullptr) {
    *grad = Matrix(b, z.cols());
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        const double g = gsim(i, j) / tau;
        if (g == 0.0) continue;
        for (std::size_t c = 0; c < z.cols(); ++c) {
          (*grad)(i, c) += g * z(j, c);
          (*grad)(j, c) += g * z(i, c);
        }
      }
    }
  }
  return res;
}

std::size_t count_valid(std::span<const int> labels) {
  std::size_t valid = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (j != i && labels[j] == labels[i]) {
        ++valid;
        break;
      }
    }
  }
  return valid;
}

}  // namespace

bool has_positive_pair(std::span<const int> labels) { return count_valid(labels) > 0; }

double cross_entropy(const Matrix& probs, std::span<const int> labels) {
  check_labels(labels, probs.rows(), probs.cols());
  if (labels.empty()) throw InvalidInput("cross_entropy on an empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    total += -std::log(std::max(probs(i, labels[i]), kCrossEntropyEpsilon));
  }
  return total / static_cast<double>(labels.size());
}

Var cross_entropy(Tape& tape, Var probs, std::span<const int> labels) {
  const double value = cross_entropy(tape.value(probs), labels);
  std::vector<int> lab(labels.begin(), labels.end());
  return tape.record("cross_entropy", Matrix(1, 1, value),
                     [probs, lab = std::move(lab)](Tape& t, const Matrix& dy) {
                       const Matrix& p = t.value(probs);
                       Matrix dp(p.rows(), p.cols());
                       const double inv_b = 1.0 / static_cast<double>(lab.size());
                       for (std::size_t i = 0; i < lab.size(); ++i) {
                         const double y = p(i, lab[i]);
                         if (y > kCrossEntropyEpsilon) dp(i, lab[i]) = -dy(0, 0) * inv_b / y;
                       }
                       t.accumulate(probs, dp);
                     });
}

InfonceResult supervised_infonce(const Matrix& embeddings, std::span<const int> labels,
                                 const PairWeightMatrix* weights, const InfonceOptions& options) {
  const std::size_t valid = count_valid(labels);
  std::vector<double> coeff(labels.size(), valid ? 1.0 / static_cast<double>(valid) : 0.0);
  InfonceResult res;
  Matrix grad;
  res = infonce_core(embeddings, labels, weights, options.temperature, &coeff, &grad);
  res.grad = std::move(grad);
  return res;
}

InfonceVars supervised_infonce(Tape& tape, Var embeddings, std::span<const int> labels,
                               const PairWeightMatrix* weights, const InfonceOptions& options,
                               const Var* anchor_probs) {
  const Matrix& z = tape.value(embeddings);
  InfonceResult res = infonce_core(z, labels, weights, options.temperature, nullptr, nullptr);
  const double valid = static_cast<double>(labels.size() - res.skipped_anchors);

  std::vector<double> scale(labels.size(), 1.0);
  if (anchor_probs != nullptr) {
    const Matrix& p = tape.value(*anchor_probs);
    check_labels(labels, p.rows(), p.cols());
    for (std::size_t i = 0; i < labels.size(); ++i) scale[i] = p(i, labels[i]);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) total += scale[i] * res.per_anchor[i];

  InfonceVars out;
  out.per_anchor = res.per_anchor;
  out.skipped_anchors = res.skipped_anchors;

  std::vector<int> lab(labels.begin(), labels.end());
  std::optional<PairWeightMatrix> w;
  if (weights != nullptr) w = *weights;
  const bool scaled = anchor_probs != nullptr;
  const Var probs_var = scaled ? *anchor_probs : Var{};
  const double tau = options.temperature;
  out.mean = tape.record(
      "supervised_infonce", Matrix(1, 1, total / valid),
      [=, per_anchor = res.per_anchor, lab = std::move(lab), w = std::move(w)](Tape& t,
                                                                               const Matrix& dy) {
        std::vector<double> coeff(lab.size());
        for (std::size_t i = 0; i < lab.size(); ++i) coeff[i] = dy(0, 0) * scale[i] / valid;
        Matrix grad;
        infonce_core(t.value(embeddings), lab, w ? &*w : nullptr, tau, &coeff, &grad);
        t.accumulate(embeddings, grad);
        if (scaled) {
          const Matrix& p = t.value(probs_var);
          Matrix dp(p.rows(), p.cols());
          for (std::size_t i = 0; i < lab.size(); ++i) {
            dp(i, lab[i]) = dy(0, 0) * per_anchor[i] / valid;
          }
          t.accumulate(probs_var, dp);
        }
      });
  return out;
}

LossBreakdown joint_loss(double ce, double nce, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidInput("lambda must be nonnegative");
  LossBreakdown b;
  b.ce = ce;
  b.nce = nce;
  b.lambda = lambda;
  b.total = ce + lambda * nce;
  return b;
}

double LambdaSchedule::at(int epoch, int total_epochs) const {
  if (!linear) return start;
  if (total_epochs <= 1) return end;
  const double t = std::clamp(static_cast<double>(epoch) / (total_epochs - 1), 0.0, 1.0);
  return start + (end - start) * t;
}

}  // namespace cedr
