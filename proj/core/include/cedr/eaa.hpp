#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "cedr/matrix.hpp"
#include "cedr/pair_weights.hpp"

namespace cedr {

enum class SampleTag { normal, outlier, unstable };
enum class WeightMode { varying, fixed };

const char* to_string(SampleTag tag);
const char* to_string(WeightMode mode);

/// Base-2 Shannon entropy of each row after renormalising it to sum 1.
/// 0·log 0 is taken as 0. Throws InvalidInput for negative entries or a
/// row that sums to zero.
std::vector<double> shannon_entropy(const nn::Matrix& probs);

/// Entropy cut-offs expressed for a 15-class problem (max ≈ 3.9 bits).
/// `scale` maps them onto another class count: a sample's entropy E is
/// compared as E / scale, so the thresholds keep their fraction of the
/// entropy range. scale = 1 applies the numbers literally.
struct EntropyThresholds {
  double low = 1.0;
  double high = 2.5;
  double unstable_offset = 1.2;
  double scale = 1.0;

  static constexpr std::size_t kReferenceClasses = 15;
  /// scale = log2(num_classes) / log2(15).
  static EntropyThresholds for_classes(std::size_t num_classes);
};

struct EntropyProfile {
  std::vector<double> entropy;  // bits
  std::vector<int> predicted;
  std::vector<bool> correct;
  std::vector<SampleTag> tag;
  EntropyThresholds thresholds;

  std::size_t size() const { return entropy.size(); }
};

/// outlier: E/scale < low and misclassified. unstable: E/scale > high and
/// correctly classified. Everything else is normal. Prediction is argmax
/// (lowest index on ties).
EntropyProfile classify_samples(const nn::Matrix& probs, std::span<const int> labels,
                                const EntropyThresholds& thresholds = {});

struct SampleWeights {
  std::vector<double> a;
  WeightMode mode = WeightMode::varying;
};

inline constexpr double kFixedOutlierWeight = 0.8;
inline constexpr double kFixedUnstableWeight = 1.2;

/// varying: outlier → E/scale, unstable → E/scale − offset, normal → 1.
/// fixed:   outlier → 0.8,     unstable → 1.2,              normal → 1.
SampleWeights sample_weight(const EntropyProfile& profile, WeightMode mode);

/// max(a_i, a_j) when both are ≥ 1, otherwise min(a_i, a_j).
double pair_select(double a_i, double a_j);

/// Both pair sets get pair_select(a_i, a_j).
PairWeightMatrix eaa_pair_weights(const SampleWeights& weights, std::span<const int> labels);

/// Negative pairs: sqrt(w_cpcm² + w_eaa²), divided by sqrt 2 when
/// `renormalize` so that two neutral weights fuse to 1. Positive pairs keep
/// the EAA weight. Throws InvalidInput when the two matrices cover
/// different batches.
PairWeightMatrix fuse_weights(const PairWeightMatrix& cpcm, const PairWeightMatrix& eaa,
                              bool renormalize = true);

/// CSV with columns sample_id,entropy,correct,tag.
void write_entropy_csv(std::ostream& out, const EntropyProfile& profile);

}  // namespace cedr
