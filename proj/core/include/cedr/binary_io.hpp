#pragma once

// Little-endian scalar helpers shared by the checkpoint and dataset formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "cedr/error.hpp"

namespace cedr::io {

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
  static_assert(std::is_trivially_copyable_v<T>);
  const auto offset = static_cast<long long>(in.tellg());
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw FormatError(std::string("truncated ") + what + " at offset " + std::to_string(offset));
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

inline std::string read_bytes(std::istream& in, std::size_t n, const char* what) {
  const auto offset = static_cast<long long>(in.tellg());
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), static_cast<std::streamsize>(n))) {
    throw FormatError(std::string("truncated ") + what + " at offset " + std::to_string(offset));
  }
  return s;
}

}  // namespace cedr::io
