#include "cedr/checkpoint.hpp"

#include <fstream>

#include "cedr/binary_io.hpp"
#include "cedr/error.hpp"

namespace cedr::nn {

void write_checkpoint(std::ostream& out, const std::vector<NamedTensor>& tensors) {
  out.write(kCheckpointMagic, 4);
  io::write_le<std::uint16_t>(out, kCheckpointVersion);
  for (const auto& t : tensors) {
    if (t.name.size() > 0xFFFF) throw InvalidInput("tensor name too long: " + t.name);
    io::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    io::write_le<std::uint16_t>(out, 2);
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.value.rows()));
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.value.cols()));
    for (double v : t.value.values()) io::write_le<double>(out, v);
  }
}

std::vector<NamedTensor> read_checkpoint(std::istream& in) {
  const std::string magic = io::read_bytes(in, 4, "checkpoint magic");
  if (magic != std::string(kCheckpointMagic, 4)) {
    throw FormatError("bad checkpoint magic at offset 0");
  }
  const auto version = io::read_le<std::uint16_t>(in, "checkpoint version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                      " at offset 4");
  }
  std::vector<NamedTensor> tensors;
  while (in.peek() != std::char_traits<char>::eof()) {
    NamedTensor t;
    const auto name_len = io::read_le<std::uint16_t>(in, "tensor name length");
    t.name = io::read_bytes(in, name_len, "tensor name");
    const auto offset = static_cast<long long>(in.tellg());
    const auto ndims = io::read_le<std::uint16_t>(in, "tensor rank");
    if (ndims == 0 || ndims > 2) {
      throw FormatError("tensor '" + t.name + "' has unsupported rank " + std::to_string(ndims) +
                        " at offset " + std::to_string(offset));
    }
    std::size_t dims[2] = {1, 1};
    for (std::size_t d = 0; d < ndims; ++d) dims[d] = io::read_le<std::uint32_t>(in, "tensor dim");
    if (ndims == 1) std::swap(dims[0], dims[1]);
    std::vector<double> values(dims[0] * dims[1]);
    for (double& v : values) v = io::read_le<double>(in, "tensor values");
    t.value = Matrix(dims[0], dims[1], std::move(values));
    tensors.push_back(std::move(t));
  }
  return tensors;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_checkpoint(out, tensors);
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace cedr::nn
