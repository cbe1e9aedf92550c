// Copyright 2026 The featborrow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Binary tensor files:
//
//   offset 0   4 bytes   magic "PBT1"
//   offset 4   1 byte    rank r (>= 1)
//   offset 5   8*r       dims, unsigned 64-bit little-endian
//   then       8*prod    payload, IEEE-754 binary64 little-endian, row-major
//
// Nothing may follow the payload.

#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "featborrow/error.hpp"
#include "featborrow/tensor.hpp"

namespace featborrow {

inline constexpr std::array<char, 4> kTensorMagic{'P', 'B', 'T', '1'};

struct TensorFile {
  std::vector<std::uint64_t> dims;
  std::vector<double> data;

  std::size_t rank() const noexcept { return dims.size(); }

  friend bool operator==(const TensorFile&, const TensorFile&) = default;
};

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes;
  for (std::size_t k = 0; k < 8; ++k) bytes[k] = static_cast<char>((v >> (8 * k)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

inline std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) throw FormatError("tensor file truncated");
  std::uint64_t v = 0;
  for (std::size_t k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
  return v;
}

inline std::uint64_t element_count(const std::vector<std::uint64_t>& dims) {
  std::uint64_t total = 1;
  for (auto d : dims) {
    if (d != 0 && total > std::numeric_limits<std::uint64_t>::max() / 8 / d) {
      throw FormatError("tensor dims overflow");
    }
    total *= d;
  }
  return total;
}

}  // namespace detail

inline void write_tensor(std::ostream& out, const TensorFile& t) {
  if (t.dims.empty() || t.dims.size() > 255) throw ShapeError("tensor rank must be in [1, 255]");
  if (detail::element_count(t.dims) != t.data.size()) throw ShapeError("tensor dims do not match payload length");
  out.write(kTensorMagic.data(), kTensorMagic.size());
  out.put(static_cast<char>(t.dims.size()));
  for (auto d : t.dims) detail::put_u64(out, d);
  for (double v : t.data) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw IoError("failed writing tensor");
}

inline TensorFile read_tensor(std::istream& in) {
  std::array<char, 4> magic;
  if (!in.read(magic.data(), magic.size()) || magic != kTensorMagic) throw FormatError("not a PBT1 tensor file");
  const int rank = in.get();
  if (rank == std::char_traits<char>::eof()) throw FormatError("tensor file truncated");
  if (rank == 0) throw FormatError("tensor rank 0");
  TensorFile t;
  for (int k = 0; k < rank; ++k) t.dims.push_back(detail::get_u64(in));
  const std::uint64_t count = detail::element_count(t.dims);
  t.data.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) t.data.push_back(std::bit_cast<double>(detail::get_u64(in)));
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after tensor payload");
  return t;
}

inline void save_tensor(const std::string& path, const TensorFile& t) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_tensor(out, t);
}

inline TensorFile load_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  return read_tensor(in);
}

inline TensorFile to_tensor_file(const Matrix& m) {
  return {{m.rows(), m.cols()}, std::vector<double>(m.values().begin(), m.values().end())};
}

inline TensorFile to_tensor_file(const FeatureMap& x) {
  return {{x.h(), x.w(), x.c()}, std::vector<double>(x.values().begin(), x.values().end())};
}

inline Matrix to_matrix(const TensorFile& t) {
  if (t.rank() != 2) throw FormatError("expected a rank-2 tensor, got rank " + std::to_string(t.rank()));
  return Matrix(t.dims[0], t.dims[1], t.data);
}

inline FeatureMap to_feature_map(const TensorFile& t) {
  if (t.rank() != 3) throw FormatError("expected a rank-3 tensor, got rank " + std::to_string(t.rank()));
  return FeatureMap(t.dims[0], t.dims[1], t.dims[2], t.data);
}

}  // namespace featborrow
