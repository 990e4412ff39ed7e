#include "cedr/eaa.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "cedr/error.hpp"

namespace cedr {

using nn::Matrix;

const char* to_string(SampleTag tag) {
  switch (tag) {
    case SampleTag::normal: return "normal";
    case SampleTag::outlier: return "outlier";
    case SampleTag::unstable: return "unstable";
  }
  return "?";
}

const char* to_string(WeightMode mode) { return mode == WeightMode::varying ? "varying" : "fixed"; }

std::vector<double> shannon_entropy(const Matrix& probs) {
  std::vector<double> out(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    double total = 0.0;
    for (double p : probs.row(r)) {
      if (!(p >= 0.0)) {
        throw InvalidInput("shannon_entropy: row " + std::to_string(r) + " has a negative entry");
      }
      total += p;
    }
    if (!(total > 0.0)) {
      throw InvalidInput("shannon_entropy: row " + std::to_string(r) + " sums to zero");
    }
    double h = 0.0;
    for (double p : probs.row(r)) {
      const double q = p / total;
      if (q > 0.0) h -= q * std::log2(q);
    }
    out[r] = std::max(h, 0.0);
  }
  return out;
}

EntropyThresholds EntropyThresholds::for_classes(std::size_t num_classes) {
  EntropyThresholds t;
  t.scale = std::log2(static_cast<double>(num_classes)) /
            std::log2(static_cast<double>(kReferenceClasses));
  return t;
}

EntropyProfile classify_samples(const Matrix& probs, std::span<const int> labels,
                                const EntropyThresholds& thresholds) {
  if (labels.size() != probs.rows()) {
    throw ShapeError(std::to_string(labels.size()) + " labels for " +
                     std::to_string(probs.rows()) + " probability rows");
  }
  if (!(thresholds.scale > 0.0)) throw InvalidInput("entropy threshold scale must be positive");
  EntropyProfile prof;
  prof.thresholds = thresholds;
  prof.entropy = shannon_entropy(probs);
  const std::size_t n = probs.rows();
  prof.predicted.resize(n);
  prof.correct.resize(n);
  prof.tag.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = probs.row(i);
    prof.predicted[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    prof.correct[i] = prof.predicted[i] == labels[i];
    const double e = prof.entropy[i] / thresholds.scale;
    if (e < thresholds.low && !prof.correct[i]) {
      prof.tag[i] = SampleTag::outlier;
    } else if (e > thresholds.high && prof.correct[i]) {
      prof.tag[i] = SampleTag::unstable;
    } else {
      prof.tag[i] = SampleTag::normal;
    }
  }
  return prof;
}

SampleWeights sample_weight(const EntropyProfile& profile, WeightMode mode) {
  SampleWeights w;
  w.mode = mode;
  w.a.resize(profile.size());
  const auto& t = profile.thresholds;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const double e = profile.entropy[i] / t.scale;
    switch (profile.tag[i]) {
      case SampleTag::outlier:
        w.a[i] = mode == WeightMode::varying ? e : kFixedOutlierWeight;
        break;
      case SampleTag::unstable:
        w.a[i] = mode == WeightMode::varying ? e - t.unstable_offset : kFixedUnstableWeight;
        break;
      case SampleTag::normal:
        w.a[i] = 1.0;
        break;
    }
  }
  return w;
}

double pair_select(double a_i, double a_j) {
  return (a_i >= 1.0 && a_j >= 1.0) ? std::max(a_i, a_j) : std::min(a_i, a_j);
}

PairWeightMatrix eaa_pair_weights(const SampleWeights& weights, std::span<const int> labels) {
  if (weights.a.size() != labels.size()) {
    throw ShapeError(std::to_string(weights.a.size()) + " sample weights for " +
                     std::to_string(labels.size()) + " labels");
  }
  PairWeightMatrix out = PairWeightMatrix::unit(labels);
  out.source = PairWeightMatrix::Source::eaa;
  const std::size_t b = labels.size();
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      if (i == j) continue;
      const double w = pair_select(weights.a[i], weights.a[j]);
      if (labels[i] == labels[j]) {
        out.w_pos(i, j) = w;
      } else {
        out.w_neg(i, j) = w;
      }
    }
  }
  return out;
}

PairWeightMatrix fuse_weights(const PairWeightMatrix& cpcm, const PairWeightMatrix& eaa,
                              bool renormalize) {
  if (cpcm.labels != eaa.labels || !cpcm.w_neg.same_shape(eaa.w_neg) ||
      !cpcm.w_pos.same_shape(eaa.w_pos)) {
    throw InvalidInput("fuse_weights: CPCM and EAA weights cover different pair sets");
  }
  PairWeightMatrix out = eaa;
  out.source = PairWeightMatrix::Source::fused;
  const double norm = renormalize ? 1.0 / std::sqrt(2.0) : 1.0;
  const std::size_t b = out.labels.size();
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      if (!out.is_negative_pair(i, j)) continue;
      out.w_neg(i, j) = std::hypot(cpcm.w_neg(i, j), eaa.w_neg(i, j)) * norm;
    }
  }
  return out;
}

void write_entropy_csv(std::ostream& out, const EntropyProfile& profile) {
  out << "sample_id,entropy,correct,tag\n";
  out.precision(17);
  for (std::size_t i = 0; i < profile.size(); ++i) {
    out << i << ',' << profile.entropy[i] << ',' << (profile.correct[i] ? 1 : 0) << ','
        << to_string(profile.tag[i]) << '\n';
  }
}

}  // namespace cedr
