#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "msem/errors.hpp"

// Little-endian binary primitives shared by the checkpoint and index formats.
namespace msem::binio {

inline void write_u8(std::ostream& os, uint8_t v) { os.put(static_cast<char>(v)); }

inline void write_u32(std::ostream& os, uint32_t v) {
  char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
               static_cast<char>(v >> 24)};
  os.write(b, 4);
}

inline void write_u64(std::ostream& os, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(v >> (8 * i));
  os.write(b, 8);
}

inline void write_f32(std::ostream& os, float v) {
  uint32_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  __builtin_memcpy(&bits, &v, 4);
  write_u32(os, bits);
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void read_exact(std::istream& is, char* buf, size_t n, const char* what) {
  is.read(buf, static_cast<std::streamsize>(n));
  if (static_cast<size_t>(is.gcount()) != n) {
    throw TruncatedError(std::string("truncated file while reading ") + what);
  }
}

inline uint8_t read_u8(std::istream& is, const char* what) {
  char b;
  read_exact(is, &b, 1, what);
  return static_cast<uint8_t>(b);
}

inline uint32_t read_u32(std::istream& is, const char* what) {
  char b[4];
  read_exact(is, b, 4, what);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

inline uint64_t read_u64(std::istream& is, const char* what) {
  char b[8];
  read_exact(is, b, 8, what);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

inline float read_f32(std::istream& is, const char* what) {
  const uint32_t bits = read_u32(is, what);
  float v;
  __builtin_memcpy(&v, &bits, 4);
  return v;
}

inline std::string read_string(std::istream& is, const char* what) {
  const uint32_t n = read_u32(is, what);
  std::string s(n, '\0');
  if (n) read_exact(is, s.data(), n, what);
  return s;
}

}  // namespace msem::binio
