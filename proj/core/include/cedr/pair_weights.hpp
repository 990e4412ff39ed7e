#pragma once

#include <span>
#include <vector>

#include "cedr/matrix.hpp"

namespace cedr {

/// Per-pair multipliers for the contrastive loss of one batch.
///
/// Both matrices are batch×batch and indexed (anchor, other). Which entries
/// are read is decided by `labels`: `w_pos` on same-label pairs (i ≠ j),
/// `w_neg` on different-label pairs. Other entries are ignored and kept at 1.
struct PairWeightMatrix {
  enum class Source { unit, cpcm, eaa, fused };

  nn::Matrix w_pos;
  nn::Matrix w_neg;
  std::vector<int> labels;
  Source source = Source::unit;

  static PairWeightMatrix unit(std::span<const int> labels);

  std::size_t batch_size() const { return labels.size(); }
  bool is_positive_pair(std::size_t i, std::size_t j) const {
    return i != j && labels[i] == labels[j];
  }
  bool is_negative_pair(std::size_t i, std::size_t j) const { return labels[i] != labels[j]; }

  /// Throws InvalidInput when shapes disagree with `labels` or a used entry is not > 0.
  void validate() const;
};

const char* to_string(PairWeightMatrix::Source source);

}  // namespace cedr
