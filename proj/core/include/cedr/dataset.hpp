#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cedr/encoder.hpp"
#include "cedr/shapes.hpp"

namespace cedr {

struct DatasetSplit {
  std::vector<std::string> class_names;
  std::vector<PointCloudSample> train;
  std::vector<PointCloudSample> test;
  std::uint64_t seed = 0;  // generation seed; not persisted in files

  std::size_t num_classes() const { return class_names.size(); }
  /// Samples per class in `samples`.
  std::vector<std::size_t> class_counts(std::span<const PointCloudSample> samples) const;

  /// Compares content only; `seed` is bookkeeping.
  friend bool operator==(const DatasetSplit& a, const DatasetSplit& b) {
    return a.class_names == b.class_names && a.train == b.train && a.test == b.test;
  }
};

struct DatasetOptions {
  std::size_t num_classes = 8;
  std::size_t train_per_class = 50;
  std::size_t test_per_class = 20;
  std::size_t num_points = 256;
  PerturbationConfig perturbation;
  std::uint64_t seed = 0;
};

/// Each sample draws from its own stream derived from (seed, split, index),
/// so the result does not depend on generation order. Samples are stored
/// class-major.
DatasetSplit build_dataset(const std::vector<ShapeSpec>& specs, const DatasetOptions& options);
DatasetSplit build_dataset(const DatasetOptions& options);

inline constexpr char kDatasetMagic[4] = {'C', 'P', 'C', 'D'};
inline constexpr std::uint16_t kDatasetVersion = 1;

struct SampleFile {
  std::vector<std::string> class_names;
  std::vector<PointCloudSample> samples;
};

// Layout (little-endian):
//   "CPCD" | u16 version | u16 class_count | class_count × (u16 len | name bytes)
//   | u32 sample_count | per sample:
//       u16 label | u32 N | N×3 f32 (x,y,z per point) |
//       f32 shift | f32 rotation | f32 scale | f32 clutter_fraction | f32 occlusion_fraction
void write_samples(std::ostream& out, const std::vector<std::string>& class_names,
                   std::span<const PointCloudSample> samples);
/// Throws FormatError with the byte offset of the first bad field.
SampleFile read_samples(std::istream& in);

/// Exact byte size of a sample file.
std::uint64_t sample_file_size(const std::vector<std::string>& class_names,
                               std::span<const PointCloudSample> samples);

/// A dataset on disk is a directory holding train.cpcd and test.cpcd.
void write_dataset(const std::filesystem::path& dir, const DatasetSplit& split);
DatasetSplit read_dataset(const std::filesystem::path& dir);

/// Stacks the selected samples into one encoder batch. All must share N.
PointBatch make_batch(std::span<const PointCloudSample> samples, std::span<const std::size_t> indices);
std::vector<int> labels_of(std::span<const PointCloudSample> samples,
                           std::span<const std::size_t> indices);

}  // namespace cedr
