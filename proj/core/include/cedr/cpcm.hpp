#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cedr/matrix.hpp"
#include "cedr/pair_weights.hpp"

namespace cedr {

enum class CenterScope { batch, running };

/// Mean embedding per class. Rows of absent classes are zero and flagged.
struct ClassCenters {
  nn::Matrix centers;  // |C|×D
  std::vector<bool> present;
  CenterScope scope = CenterScope::batch;

  std::size_t num_classes() const { return present.size(); }
};

/// Arithmetic mean of the embeddings of each class in the batch.
ClassCenters compute_centers(const nn::Matrix& embeddings, std::span<const int> labels,
                             std::size_t num_classes);

/// Exponential moving average of batch centers: c ← decay·c + (1 − decay)·c_batch.
/// A class seen for the first time takes its batch center directly.
class RunningCenters {
 public:
  explicit RunningCenters(std::size_t num_classes, double decay = 0.9)
      : num_classes_(num_classes), decay_(decay) {}

  const ClassCenters& update(const nn::Matrix& embeddings, std::span<const int> labels);
  const ClassCenters& current() const { return state_; }

 private:
  std::size_t num_classes_;
  double decay_;
  ClassCenters state_;
};

/// Class-pair similarity weight 1 + e^{−2d} = (e^d + e^{−d}) / e^d.
/// Lies in (1, 2]; equals 2 at d = 0. Throws InvalidInput for d < 0.
double cpcm_weight(double dist);

struct ClassPairWeights {
  nn::Matrix w_minus;  // |C|×|C|, symmetric, 2 on the diagonal
  nn::Matrix dist;     // |C|×|C| Euclidean center distances
  std::vector<bool> defined;
};

ClassPairWeights class_pair_weights(const ClassCenters& centers);

enum class MiningMethod { all_pairs, nearest_only };

/// Absolute gap by which the nearest class must beat the second nearest.
inline constexpr double kNearestOnlyMargin = 0.8;

/// For each defined class, its nearest other class is kept when
/// nearest + margin < second nearest (or when it is the only other class).
/// Returns unordered pairs (a < b), deduplicated.
std::vector<std::pair<int, int>> nearest_only_pairs(const nn::Matrix& dist,
                                                    const std::vector<bool>& defined,
                                                    double margin = kNearestOnlyMargin);

/// Negative-pair weights from class-pair weights. all_pairs: every negative
/// pair (i, j) gets W⁻(class_i, class_j). nearest_only: only pairs whose
/// classes were mined by `nearest_only_pairs` keep W⁻, the rest get 1.
/// Positive-pair weights are 1. Throws InvalidInput listing any batch class
/// without a defined center.
PairWeightMatrix cpcm_negative_weights(std::span<const int> labels, const ClassPairWeights& weights,
                                       MiningMethod method);

/// Distance matrix with class names as row and column headers.
void write_center_distance_csv(std::ostream& out, const nn::Matrix& dist,
                               const std::vector<std::string>& class_names);

const char* to_string(MiningMethod method);
const char* to_string(CenterScope scope);

}  // namespace cedr
