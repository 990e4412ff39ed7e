#include "cedr/cpcm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include "cedr/error.hpp"

namespace cedr {

using nn::Matrix;

ClassCenters compute_centers(const Matrix& embeddings, std::span<const int> labels,
                             std::size_t num_classes) {
  if (embeddings.rows() == 0) throw InvalidInput("compute_centers: no samples");
  if (labels.size() != embeddings.rows()) {
    throw ShapeError("compute_centers: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(embeddings.rows()) + " embeddings");
  }
  ClassCenters out;
  out.centers = Matrix(num_classes, embeddings.cols());
  out.present.assign(num_classes, false);
  std::vector<std::size_t> count(num_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw InvalidInput("label " + std::to_string(labels[i]) + " outside [0, " +
                         std::to_string(num_classes) + ")");
    }
    auto c = out.centers.row(labels[i]);
    const auto e = embeddings.row(i);
    for (std::size_t d = 0; d < c.size(); ++d) c[d] += e[d];
    ++count[labels[i]];
  }
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (count[k] == 0) continue;
    out.present[k] = true;
    for (double& v : out.centers.row(k)) v /= static_cast<double>(count[k]);
  }
  return out;
}

const ClassCenters& RunningCenters::update(const Matrix& embeddings, std::span<const int> labels) {
  ClassCenters batch = compute_centers(embeddings, labels, num_classes_);
  if (state_.present.empty()) {
    state_.centers = Matrix(num_classes_, embeddings.cols());
    state_.present.assign(num_classes_, false);
    state_.scope = CenterScope::running;
  }
  for (std::size_t k = 0; k < num_classes_; ++k) {
    if (!batch.present[k]) continue;
    auto c = state_.centers.row(k);
    const auto b = batch.centers.row(k);
    for (std::size_t d = 0; d < c.size(); ++d) {
      c[d] = state_.present[k] ? decay_ * c[d] + (1.0 - decay_) * b[d] : b[d];
    }
    state_.present[k] = true;
  }
  return state_;
}

double cpcm_weight(double dist) {
  if (!(dist >= 0.0)) throw InvalidInput("cpcm_weight: distance must be nonnegative");
  return 1.0 + std::exp(-2.0 * dist);
}

ClassPairWeights class_pair_weights(const ClassCenters& centers) {
  const std::size_t c = centers.num_classes();
  ClassPairWeights out{Matrix(c, c, 1.0), Matrix(c, c), centers.present};
  for (std::size_t i = 0; i < c; ++i) {
    if (!centers.present[i]) continue;
    out.w_minus(i, i) = 2.0;
    for (std::size_t j = i + 1; j < c; ++j) {
      if (!centers.present[j]) continue;
      double ss = 0.0;
      for (std::size_t d = 0; d < centers.centers.cols(); ++d) {
        const double diff = centers.centers(i, d) - centers.centers(j, d);
        ss += diff * diff;
      }
      const double dist = std::sqrt(ss);
      out.dist(i, j) = out.dist(j, i) = dist;
      out.w_minus(i, j) = out.w_minus(j, i) = cpcm_weight(dist);
    }
  }
  return out;
}

std::vector<std::pair<int, int>> nearest_only_pairs(const Matrix& dist,
                                                    const std::vector<bool>& defined,
                                                    double margin) {
  std::set<std::pair<int, int>> pairs;
  const std::size_t c = defined.size();
  for (std::size_t i = 0; i < c; ++i) {
    if (!defined[i]) continue;
    constexpr double inf = std::numeric_limits<double>::infinity();
    double best = inf;
    double second = inf;
    int nearest = -1;
    for (std::size_t j = 0; j < c; ++j) {
      if (j == i || !defined[j]) continue;
      const double d = dist(i, j);
      if (d < best) {
        second = best;
        best = d;
        nearest = static_cast<int>(j);
      } else if (d < second) {
        second = d;
      }
    }
    if (nearest < 0) continue;
    if (best + margin < second) {
      pairs.insert({std::min(static_cast<int>(i), nearest), std::max(static_cast<int>(i), nearest)});
    }
  }
  return {pairs.begin(), pairs.end()};
}

PairWeightMatrix cpcm_negative_weights(std::span<const int> labels, const ClassPairWeights& weights,
                                       MiningMethod method) {
  const std::size_t c = weights.defined.size();
  std::vector<int> missing;
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= c) {
      throw InvalidInput("label " + std::to_string(l) + " outside [0, " + std::to_string(c) + ")");
    }
    if (!weights.defined[l] && std::find(missing.begin(), missing.end(), l) == missing.end()) {
      missing.push_back(l);
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (int m : missing) list += (list.empty() ? "" : ", ") + std::to_string(m);
    throw InvalidInput("no class center for batch class(es): " + list);
  }

  Matrix selected(c, c, method == MiningMethod::all_pairs ? 1.0 : 0.0);
  if (method == MiningMethod::nearest_only) {
    for (auto [a, b] : nearest_only_pairs(weights.dist, weights.defined)) {
      selected(a, b) = selected(b, a) = 1.0;
    }
  }

  PairWeightMatrix out = PairWeightMatrix::unit(labels);
  out.source = PairWeightMatrix::Source::cpcm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[i] == labels[j]) continue;
      if (selected(labels[i], labels[j]) != 0.0) out.w_neg(i, j) = weights.w_minus(labels[i], labels[j]);
    }
  }
  return out;
}

void write_center_distance_csv(std::ostream& out, const Matrix& dist,
                               const std::vector<std::string>& class_names) {
  if (class_names.size() != dist.rows() || dist.rows() != dist.cols()) {
    throw ShapeError("center distance matrix " + dist.shape_string() + " vs " +
                     std::to_string(class_names.size()) + " class names");
  }
  out << "class";
  for (const auto& n : class_names) out << ',' << n;
  out << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < dist.rows(); ++i) {
    out << class_names[i];
    for (std::size_t j = 0; j < dist.cols(); ++j) out << ',' << dist(i, j);
    out << '\n';
  }
}

const char* to_string(MiningMethod method) {
  return method == MiningMethod::all_pairs ? "all_pairs" : "nearest_only";
}

const char* to_string(CenterScope scope) {
  return scope == CenterScope::batch ? "batch" : "running";
}

}  // namespace cedr
