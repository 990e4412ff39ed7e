#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cedr/matrix.hpp"

namespace cedr::nn {

inline constexpr char kCheckpointMagic[4] = {'C', 'E', 'D', 'R'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Matrix value;
};

// Layout (little-endian):
//   "CEDR" | u16 version | records until end of file
//   record: u16 name_len | name bytes | u16 ndims (=2) | u32 dims[ndims] | f64 values (row-major)
void write_checkpoint(std::ostream& out, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

}  // namespace cedr::nn
