#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cedr/eaa.hpp"
#include "cedr/matrix.hpp"

namespace cedr {

struct EvalReport {
  std::size_t num_samples = 0;
  double overall_acc = 0.0;    // trace / total
  double avg_class_acc = 0.0;  // mean recall over classes with support
  double macro_f1 = 0.0;       // mean F1 over classes with support
  std::vector<double> per_class_precision;
  std::vector<double> per_class_recall;
  std::vector<double> per_class_f1;
  std::vector<std::size_t> support;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<double> center_distance_sum;           // empty unless embeddings were given
  std::vector<std::size_t> entropy_histogram;        // empty unless probabilities were given
};

/// Classification metrics from predicted and true labels. Precision of a
/// class that is never predicted is 0; F1 is 0 where P + R = 0.
EvalReport evaluate(std::span<const int> predicted, std::span<const int> labels,
                    std::size_t num_classes);

/// Same, with predictions taken as the argmax of `probs`; also fills the
/// entropy histogram and, when `embeddings` is non-null, the per-class
/// center distance sums.
EvalReport evaluate(const nn::Matrix& probs, std::span<const int> labels,
                    const nn::Matrix* embeddings = nullptr);

struct CenterDistanceReport {
  nn::Matrix dist;           // |C|×|C|, symmetric
  std::vector<double> sums;  // row sums over present classes
  std::vector<bool> present; // false rows are flagged: no samples of that class
};

CenterDistanceReport center_distance_report(const nn::Matrix& embeddings,
                                            std::span<const int> labels, std::size_t num_classes);

inline constexpr std::size_t kEntropyBins = 20;

/// Uniform bins over [0, log2 num_classes]; the top edge falls in the last bin.
std::vector<std::size_t> entropy_histogram(std::span<const double> entropy,
                                           std::size_t num_classes,
                                           std::size_t bins = kEntropyBins);

/// CSV with class names as headers: rows are true classes, columns predictions.
void write_confusion_csv(std::ostream& out, const EvalReport& report,
                         const std::vector<std::string>& class_names);

/// Flat JSON summary (metric name → value, arrays for per-class values).
std::string report_to_json(const EvalReport& report, const std::vector<std::string>& class_names);

/// CSV columns: sample_id,label,entropy,tag,e0..e{D-1}.
void export_embeddings(std::ostream& out, const nn::Matrix& embeddings,
                       std::span<const int> labels, const EntropyProfile& profile);
void export_embeddings(const std::filesystem::path& path, const nn::Matrix& embeddings,
                       std::span<const int> labels, const EntropyProfile& profile);

struct EmbeddingTable {
  std::vector<int> labels;
  std::vector<double> entropy;
  std::vector<std::string> tags;
  nn::Matrix embeddings;
};

/// Parses what `export_embeddings` writes.
EmbeddingTable read_embeddings_csv(std::istream& in);

}  // namespace cedr
