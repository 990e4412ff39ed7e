#include "cedr/dataset.hpp"

#include <fstream>

#include "cedr/binary_io.hpp"
#include "cedr/error.hpp"

namespace cedr {

std::vector<std::size_t> DatasetSplit::class_counts(std::span<const PointCloudSample> samples) const {
  std::vector<std::size_t> counts(num_classes(), 0);
  for (const auto& s : samples) {
    if (s.label >= 0 && static_cast<std::size_t>(s.label) < counts.size()) ++counts[s.label];
  }
  return counts;
}

DatasetSplit build_dataset(const std::vector<ShapeSpec>& specs, const DatasetOptions& options) {
  if (specs.size() < 2) throw ConfigError("a dataset needs at least 2 classes");
  if (options.train_per_class < 2 || options.test_per_class < 2) {
    throw ConfigError("train and test sizes per class must be at least 2");
  }
  DatasetSplit split;
  split.seed = options.seed;
  for (const auto& s : specs) split.class_names.push_back(s.name);

  auto fill = [&](std::vector<PointCloudSample>& out, std::size_t per_class, std::uint64_t stream) {
    out.reserve(specs.size() * per_class);
    for (std::size_t c = 0; c < specs.size(); ++c) {
      for (std::size_t k = 0; k < per_class; ++k) {
        Rng rng = Rng::derive(options.seed, stream, c * per_class + k);
        out.push_back(generate_sample(specs[c], options.perturbation, options.num_points, rng));
      }
    }
  };
  fill(split.train, options.train_per_class, 1);
  fill(split.test, options.test_per_class, 2);
  return split;
}

DatasetSplit build_dataset(const DatasetOptions& options) {
  return build_dataset(default_shape_specs(options.num_classes), options);
}

void write_samples(std::ostream& out, const std::vector<std::string>& class_names,
                   std::span<const PointCloudSample> samples) {
  if (class_names.size() > 0xFFFF) throw InvalidInput("too many classes for the file format");
  out.write(kDatasetMagic, 4);
  io::write_le<std::uint16_t>(out, kDatasetVersion);
  io::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(class_names.size()));
  for (const auto& n : class_names) {
    io::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(n.size()));
    out.write(n.data(), static_cast<std::streamsize>(n.size()));
  }
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(samples.size()));
  for (const auto& s : samples) {
    io::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(s.label));
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.points.rows()));
    for (double v : s.points.values()) io::write_le<float>(out, static_cast<float>(v));
    io::write_le<float>(out, s.meta.shift);
    io::write_le<float>(out, s.meta.rotation);
    io::write_le<float>(out, s.meta.scale);
    io::write_le<float>(out, s.meta.clutter_fraction);
    io::write_le<float>(out, s.meta.occlusion_fraction);
  }
}

SampleFile read_samples(std::istream& in) {
  const std::string magic = io::read_bytes(in, 4, "dataset magic");
  if (magic != std::string(kDatasetMagic, 4)) throw FormatError("bad dataset magic at offset 0");
  const auto version = io::read_le<std::uint16_t>(in, "dataset version");
  if (version != kDatasetVersion) {
    throw FormatError("unsupported dataset version " + std::to_string(version) + " at offset 4");
  }
  SampleFile f;
  const auto classes = io::read_le<std::uint16_t>(in, "class count");
  for (std::uint16_t c = 0; c < classes; ++c) {
    const auto len = io::read_le<std::uint16_t>(in, "class name length");
    f.class_names.push_back(io::read_bytes(in, len, "class name"));
  }
  const auto count = io::read_le<std::uint32_t>(in, "sample count");
  f.samples.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    PointCloudSample s;
    const auto offset = static_cast<long long>(in.tellg());
    s.label = io::read_le<std::uint16_t>(in, "sample label");
    if (static_cast<std::size_t>(s.label) >= f.class_names.size()) {
      throw FormatError("sample " + std::to_string(i) + " label " + std::to_string(s.label) +
                        " exceeds class count at offset " + std::to_string(offset));
    }
    const auto n = io::read_le<std::uint32_t>(in, "point count");
    std::vector<double> v(static_cast<std::size_t>(n) * 3);
    for (double& x : v) x = io::read_le<float>(in, "point coordinates");
    s.points = nn::Matrix(n, 3, std::move(v));
    s.meta.shift = io::read_le<float>(in, "perturbation record");
    s.meta.rotation = io::read_le<float>(in, "perturbation record");
    s.meta.scale = io::read_le<float>(in, "perturbation record");
    s.meta.clutter_fraction = io::read_le<float>(in, "perturbation record");
    s.meta.occlusion_fraction = io::read_le<float>(in, "perturbation record");
    f.samples.push_back(std::move(s));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after sample " + std::to_string(count) + " at offset " +
                      std::to_string(static_cast<long long>(in.tellg())));
  }
  return f;
}

std::uint64_t sample_file_size(const std::vector<std::string>& class_names,
                               std::span<const PointCloudSample> samples) {
  std::uint64_t size = 4 + 2 + 2 + 4;
  for (const auto& n : class_names) size += 2 + n.size();
  for (const auto& s : samples) size += 2 + 4 + 12 * s.points.rows() + 5 * 4;
  return size;
}

namespace {

void write_file(const std::filesystem::path& path, const std::vector<std::string>& names,
                std::span<const PointCloudSample> samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_samples(out, names, samples);
  if (!out) throw Error("failed writing " + path.string());
}

SampleFile read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return read_samples(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const DatasetSplit& split) {
  std::filesystem::create_directories(dir);
  write_file(dir / "train.cpcd", split.class_names, split.train);
  write_file(dir / "test.cpcd", split.class_names, split.test);
}

DatasetSplit read_dataset(const std::filesystem::path& dir) {
  SampleFile train = read_file(dir / "train.cpcd");
  SampleFile test = read_file(dir / "test.cpcd");
  if (train.class_names != test.class_names) {
    throw FormatError(dir.string() + ": train and test class tables differ");
  }
  DatasetSplit split;
  split.class_names = std::move(train.class_names);
  split.train = std::move(train.samples);
  split.test = std::move(test.samples);
  return split;
}

PointBatch make_batch(std::span<const PointCloudSample> samples, std::span<const std::size_t> indices) {
  if (indices.empty()) throw InvalidInput("empty batch");
  const std::size_t n = samples[indices[0]].points.rows();
  PointBatch b;
  b.points_per_cloud = n;
  b.coords = nn::Matrix(indices.size() * n, 3);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto& p = samples[indices[k]].points;
    if (p.rows() != n) {
      throw ShapeError("batch mixes clouds of " + std::to_string(n) + " and " +
                       std::to_string(p.rows()) + " points");
    }
    std::copy(p.values().begin(), p.values().end(), b.coords.data() + k * n * 3);
  }
  return b;
}

std::vector<int> labels_of(std::span<const PointCloudSample> samples,
                           std::span<const std::size_t> indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(samples[i].label);
  return out;
}

}  // namespace cedr
