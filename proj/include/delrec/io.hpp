#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "delrec/check.hpp"

namespace delrec::io {

// Shared little-endian binary envelope for datasets and checkpoints:
// magic "DREC", u16 version, u16 kind.
inline constexpr std::string_view kMagic = "DREC";
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::uint16_t kKindDataset = 1;
inline constexpr std::uint16_t kKindCheckpoint = 2;

template <typename T>
void write_raw(std::ostream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.write(buf, sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  char buf[sizeof(T)];
  in.read(buf, sizeof(T));
  DELREC_CHECK(in.good(), "binary read: unexpected end of file");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

inline void write_u16(std::ostream& o, std::uint16_t v) { write_raw(o, v); }
inline void write_u32(std::ostream& o, std::uint32_t v) { write_raw(o, v); }
inline void write_u64(std::ostream& o, std::uint64_t v) { write_raw(o, v); }
inline void write_f64(std::ostream& o, double v) { write_raw(o, v); }
inline std::uint16_t read_u16(std::istream& i) {
  return read_raw<std::uint16_t>(i);
}
inline std::uint32_t read_u32(std::istream& i) {
  return read_raw<std::uint32_t>(i);
}
inline std::uint64_t read_u64(std::istream& i) {
  return read_raw<std::uint64_t>(i);
}
inline double read_f64(std::istream& i) { return read_raw<double>(i); }

inline void write_string(std::ostream& o, const std::string& s) {
  write_u32(o, static_cast<std::uint32_t>(s.size()));
  o.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& i) {
  const std::uint32_t n = read_u32(i);
  std::string s(n, '\0');
  i.read(s.data(), n);
  DELREC_CHECK(i.good(), "binary read: truncated string");
  return s;
}

inline void write_magic(std::ostream& o, std::uint16_t kind) {
  o.write(kMagic.data(), 4);
  write_u16(o, kVersion);
  write_u16(o, kind);
}

inline void read_magic(std::istream& i, std::uint16_t expected_kind) {
  char magic[4] = {};
  i.read(magic, 4);
  DELREC_CHECK(i.good() && std::string_view(magic, 4) == kMagic,
               "bad magic: not a DREC file");
  const std::uint16_t version = read_u16(i);
  DELREC_CHECK(version == kVersion,
               "unsupported DREC version " + std::to_string(version));
  const std::uint16_t kind = read_u16(i);
  DELREC_CHECK(kind == expected_kind, "DREC kind mismatch");
}

// FNV-1a, used for config fingerprints.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace delrec::io
