#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "scoreprior/grid.hpp"

namespace scoreprior {

namespace io_detail {

inline void put_u32_le(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff),
                              static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

inline void put_u64_le(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64_le(std::ostream& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  put_u64_le(out, bits);
}

inline bool get_u32_le(std::istream& in, std::uint32_t& v) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
  v = static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
      static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
  return true;
}

inline bool get_u64_le(std::istream& in, std::uint64_t& v) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return true;
}

inline bool get_f64_le(std::istream& in, double& d) {
  std::uint64_t bits;
  if (!get_u64_le(in, bits)) return false;
  std::memcpy(&d, &bits, sizeof(d));
  return true;
}

}  // namespace io_detail

inline constexpr char kGridMagic[4] = {'S', 'G', 'R', 'D'};
inline constexpr std::uint32_t kGridFormatVersion = 1;

/// Raw grid format: magic "SGRD", format version u32, height u32, width u32,
/// payload little-endian float64 row-major. Bit-exact round trip.
inline void save_grid(const std::filesystem::path& path, const ImageGrid& grid) {
  if (grid.height <= 0 || grid.width <= 0 || grid.size() == 0)
    throw IoError("save_grid: refusing to write empty grid");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_grid: cannot open " + path.string());
  out.write(kGridMagic, 4);
  io_detail::put_u32_le(out, kGridFormatVersion);
  io_detail::put_u32_le(out, static_cast<std::uint32_t>(grid.height));
  io_detail::put_u32_le(out, static_cast<std::uint32_t>(grid.width));
  for (double v : grid.data) io_detail::put_f64_le(out, v);
  if (!out) throw IoError("save_grid: write failed for " + path.string());
}

inline ImageGrid load_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_grid: cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kGridMagic, 4) != 0)
    throw IoError("load_grid: malformed header in " + path.string());
  std::uint32_t version = 0, height = 0, width = 0;
  if (!io_detail::get_u32_le(in, version) || !io_detail::get_u32_le(in, height) ||
      !io_detail::get_u32_le(in, width))
    throw IoError("load_grid: malformed header in " + path.string());
  if (version != kGridFormatVersion)
    throw IoError("load_grid: unsupported format version " + std::to_string(version) + " in " +
                  path.string());
  if (height == 0 || width == 0) throw IoError("load_grid: malformed header in " + path.string());
  ImageGrid grid(static_cast<int>(height), static_cast<int>(width));
  for (double& v : grid.data)
    if (!io_detail::get_f64_le(in, v))
      throw IoError("load_grid: truncated payload in " + path.string());
  return grid;
}

/// 16-bit binary PGM (P5, big-endian samples per the Netpbm convention).
/// Values map linearly [0, peak] -> [0, 65535] with clipping, rounding half
/// up (peak/2 -> 32768).
inline void export_pgm(const ImageGrid& grid, const std::filesystem::path& path,
                       double peak = 1.0) {
  if (peak <= 0.0) throw ConfigError("export_pgm: peak must be > 0");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("export_pgm: cannot open " + path.string());
  out << "P5\n" << grid.width << " " << grid.height << "\n65535\n";
  for (double v : grid.data) {
    const double scaled = std::floor(v / peak * 65535.0 + 0.5);
    const std::uint16_t q =
        static_cast<std::uint16_t>(std::min(65535.0, std::max(0.0, scaled)));
    out.put(static_cast<char>(q >> 8));
    out.put(static_cast<char>(q & 0xff));
  }
  if (!out) throw IoError("export_pgm: write failed for " + path.string());
}

/// FNV-1a 64-bit content hash, used for manifests and determinism checks.
inline std::uint64_t fnv1a_hash(const void* data, std::size_t size,
                                std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("hash_file: cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a_hash(buf, static_cast<std::size_t>(in.gcount()), h);
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

}  // namespace scoreprior
