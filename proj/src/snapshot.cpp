// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

// Snapshot layout (all little-endian):
//   0  char[4]  "KSLF"
//   4  uint32   format version (1)
//   8  uint32   dim
//  12  uint32   cells along axes 0, 1, 2 (1 for inactive axes)
//  24  float64  simulation time
//  32  float64  values, lexicographic with axis 0 fastest

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ksl/solver.hpp"

namespace ksl {

namespace {

constexpr std::array<char, 4> kMagic{'K', 'S', 'L', 'F'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t x) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((x >> (8 * i)) & 0xffu);
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double d) {
  auto x = std::bit_cast<std::uint64_t>(d);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((x >> (8 * i)) & 0xffu);
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(const unsigned char* b) {
  std::uint32_t x = 0;
  for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return x;
}

double get_f64(const unsigned char* b) {
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(x);
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const Field& f, double t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorCode::Io, "cannot open snapshot for writing: " + path.string());
  os.write(kMagic.data(), kMagic.size());
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(f.grid.dim()));
  for (int a = 0; a < 3; ++a) put_u32(os, static_cast<std::uint32_t>(f.grid.cells(a)));
  put_f64(os, t);
  for (double x : f.values) put_f64(os, x);
  if (!os) fail(ErrorCode::Io, "failed writing snapshot: " + path.string());
}

std::pair<Field, double> read_snapshot(const std::filesystem::path& path, const Grid& g) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::Io, "cannot open snapshot: " + path.string());
  unsigned char header[32];
  is.read(reinterpret_cast<char*>(header), sizeof header);
  if (is.gcount() != static_cast<std::streamsize>(sizeof header) ||
      std::memcmp(header, kMagic.data(), kMagic.size()) != 0)
    fail(ErrorCode::Io, "not a field snapshot: " + path.string());
  if (get_u32(header + 4) != kVersion)
    fail(ErrorCode::Io, "unsupported snapshot version in " + path.string());
  if (static_cast<int>(get_u32(header + 8)) != g.dim())
    fail(ErrorCode::InvalidArgument, "snapshot dimension does not match grid: " + path.string());
  for (int a = 0; a < 3; ++a) {
    if (static_cast<int>(get_u32(header + 12 + 4 * a)) != g.cells(a)) {
      std::ostringstream os;
      os << "snapshot cell count on axis " << a << " does not match grid: " << path.string();
      fail(ErrorCode::InvalidArgument, os.str());
    }
  }
  double t = get_f64(header + 24);
  std::vector<unsigned char> raw(g.size() * 8);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (is.gcount() != static_cast<std::streamsize>(raw.size()))
    fail(ErrorCode::Io, "truncated snapshot: " + path.string());
  std::vector<double> values(g.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = get_f64(raw.data() + 8 * i);
  return {Field(g, std::move(values)), t};
}

}  // namespace ksl
