#pragma once

#include "kspace.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace omodl::io {

namespace detail {

inline void put_u32(std::ostream &os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<char const *>(b), 4);
}

inline std::uint32_t get_u32(std::istream &is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char *>(b), 4)) throw FormatError("truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f64(std::ostream &os, double v) {
  auto u = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<char const *>(b), 8);
}

inline double get_f64(std::istream &is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char *>(b), 8)) throw FormatError("truncated payload");
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(u);
}

inline void expect_magic(std::istream &is, char const (&magic)[5]) {
  char m[4];
  if (!is.read(m, 4) || std::memcmp(m, magic, 4) != 0) throw FormatError(std::string("bad magic, expected ") + magic);
}

inline std::ofstream open_out(std::filesystem::path const &path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  return os;
}

inline std::ifstream open_in(std::filesystem::path const &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  return is;
}

} // namespace detail

/// "OKSP" | u32 version=1 | u32 rows | u32 cols | u32 channels | f64 (re, im) pairs,
/// channel-major then row-major. Little-endian throughout.
inline void write_kspace(std::filesystem::path const &path, std::vector<ComplexGrid> const &channels) {
  if (channels.empty()) throw DimensionError("need at least one channel");
  for (auto const &c : channels) c.require_same(channels.front());
  auto os = detail::open_out(path);
  os.write("OKSP", 4);
  detail::put_u32(os, 1);
  detail::put_u32(os, static_cast<std::uint32_t>(channels.front().rows()));
  detail::put_u32(os, static_cast<std::uint32_t>(channels.front().cols()));
  detail::put_u32(os, static_cast<std::uint32_t>(channels.size()));
  for (auto const &c : channels) {
    for (auto v : c.values()) {
      detail::put_f64(os, v.real());
      detail::put_f64(os, v.imag());
    }
  }
  if (!os) throw Error("write failed: " + path.string());
}

inline void write_kspace(std::filesystem::path const &path, KSpaceImage const &k) {
  write_kspace(path, std::vector<ComplexGrid>{k});
}

inline std::vector<ComplexGrid> read_kspace_channels(std::filesystem::path const &path) {
  auto is = detail::open_in(path);
  detail::expect_magic(is, "OKSP");
  if (auto v = detail::get_u32(is); v != 1) throw FormatError("unsupported OKSP version " + std::to_string(v));
  auto const rows = detail::get_u32(is), cols = detail::get_u32(is), chans = detail::get_u32(is);
  if (rows == 0 || cols == 0 || chans == 0 || rows > 65536 || cols > 65536) throw FormatError("bad OKSP dimensions");
  std::vector<ComplexGrid> out;
  for (std::uint32_t ch = 0; ch < chans; ++ch) {
    ComplexGrid g(static_cast<int>(rows), static_cast<int>(cols));
    for (auto &v : g.values()) {
      double const re = detail::get_f64(is);
      v = cplx(re, detail::get_f64(is));
    }
    out.push_back(std::move(g));
  }
  return out;
}

inline KSpaceImage read_kspace(std::filesystem::path const &path) {
  auto chans = read_kspace_channels(path);
  if (chans.size() != 1) throw FormatError("expected a single-channel OKSP file: " + path.string());
  return KSpaceImage(std::move(chans.front()));
}

/// "OMSK" | u32 rows | u32 cols | one byte (0/1) per entry, row-major.
inline void write_mask(std::filesystem::path const &path, SamplingMask const &m) {
  auto os = detail::open_out(path);
  os.write("OMSK", 4);
  detail::put_u32(os, static_cast<std::uint32_t>(m.rows()));
  detail::put_u32(os, static_cast<std::uint32_t>(m.cols()));
  os.write(reinterpret_cast<char const *>(m.entries().data()), static_cast<std::streamsize>(m.entries().size()));
  if (!os) throw Error("write failed: " + path.string());
}

inline SamplingMask read_mask(std::filesystem::path const &path) {
  auto is = detail::open_in(path);
  detail::expect_magic(is, "OMSK");
  auto const rows = detail::get_u32(is), cols = detail::get_u32(is);
  if (rows == 0 || cols == 0 || rows > 65536 || cols > 65536) throw FormatError("bad OMSK dimensions");
  std::vector<std::uint8_t> kept(static_cast<std::size_t>(rows) * cols);
  if (!is.read(reinterpret_cast<char *>(kept.data()), static_cast<std::streamsize>(kept.size()))) {
    throw FormatError("truncated mask payload");
  }
  for (auto b : kept) {
    if (b > 1) throw FormatError("mask entries must be 0 or 1");
  }
  return SamplingMask(static_cast<int>(rows), static_cast<int>(cols), std::move(kept));
}

/// 8-bit binary PGM (P5).
struct GrayImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;
};

inline void write_pgm(std::filesystem::path const &path, GrayImage const &img) {
  auto os = detail::open_out(path);
  os << "P5\n" << img.cols << " " << img.rows << "\n255\n";
  os.write(reinterpret_cast<char const *>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!os) throw Error("write failed: " + path.string());
}

inline GrayImage read_pgm(std::filesystem::path const &path) {
  auto is = detail::open_in(path);
  std::string magic;
  int maxval = 0;
  GrayImage img;
  is >> magic >> img.cols >> img.rows >> maxval;
  if (magic != "P5" || maxval != 255 || img.rows <= 0 || img.cols <= 0) throw FormatError("not an 8-bit P5 PGM");
  is.get();
  img.pixels.resize(static_cast<std::size_t>(img.rows) * img.cols);
  if (!is.read(reinterpret_cast<char *>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()))) {
    throw FormatError("truncated PGM");
  }
  return img;
}

/// Magnitude scaled linearly so that `peak` maps to 255.
inline GrayImage quantize_magnitude(ComplexGrid const &img, double peak) {
  if (!all_finite(img.values())) throw Error("cannot export a non-finite image");
  GrayImage out{img.rows(), img.cols(), std::vector<std::uint8_t>(img.size())};
  for (std::size_t i = 0; i < img.size(); ++i) {
    double const v = peak > 0.0 ? std::abs(img[i]) / peak : 0.0;
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * v), 0L, 255L));
  }
  return out;
}

inline double max_magnitude(ComplexGrid const &img) {
  double m = 0.0;
  for (auto v : img.values()) m = std::max(m, std::abs(v));
  return m;
}

} // namespace omodl::io
