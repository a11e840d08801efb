// Copyright 2026 the ralstm authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Little-endian primitives shared by the binary file formats. Reads throw
// FormatError on truncation.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "ralstm/errors.hpp"

namespace ralstm::wire {

template <typename T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_integral_v<T>);
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  }
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  static_assert(std::is_integral_v<T>);
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw FormatError("unexpected end of file while reading " + std::to_string(sizeof(T)) +
                      " bytes");
  }
  std::uint64_t v = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) v = (v << 8) | bytes[i];
  return static_cast<T>(v);
}

inline void write_f32(std::ostream& os, float value) {
  write_le<std::uint32_t>(os, std::bit_cast<std::uint32_t>(value));
}

inline float read_f32(std::istream& is) {
  return std::bit_cast<float>(read_le<std::uint32_t>(is));
}

inline void write_f64(std::ostream& os, double value) {
  write_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(value));
}

inline double read_f64(std::istream& is) {
  return std::bit_cast<double>(read_le<std::uint64_t>(is));
}

inline void write_magic(std::ostream& os, const char (&magic)[5]) { os.write(magic, 4); }

inline void expect_magic(std::istream& is, const char (&magic)[5], const std::string& what) {
  char buf[4];
  if (!is.read(buf, 4) || std::memcmp(buf, magic, 4) != 0) {
    throw FormatError("bad magic bytes: expected " + std::string(magic) + " in " + what);
  }
}

}  // namespace ralstm::wire
