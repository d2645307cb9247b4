#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "orl/errors.hpp"

namespace orl::io {

template <typename T>
T to_little_endian(T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&value, bytes, sizeof(T));
  }
  return value;
}

template <typename T>
void write(std::ostream& out, T value) {
  value = to_little_endian(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

/// Reads one little-endian value; throws `Err` with `what` on short read.
template <typename T, typename Err = TruncatedPayloadError>
T read(std::istream& in, const std::string& what) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) {
    throw Err("unexpected end of file while reading " + what);
  }
  return to_little_endian(value);
}

}  // namespace orl::io
