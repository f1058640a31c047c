// Copyright 2026 The eXmY Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EXMY_BITPACK_HPP_
#define EXMY_BITPACK_HPP_

// Power-of-2 decomposition bit packing.
//
// A k-bit code is split into segments whose widths are the set bits of k
// (7 = 4 + 2 + 1). Segments take code bits MSB first, widest segment first.
// For each segment of width w, the w-bit fields of 8 vertically adjacent
// elements (rows 8g..8g+7 of one column) are packed into one 8w-bit
// container, element i in bits [w*i, w*i + w). Containers are stored as
// little-endian bytes, row-major over the (rows / 8, cols) container grid.
// Widths 9..15 put the top 8 bits in a byte-per-element segment.
//
// Storage is exactly n * k bits and depends only on k, never on the
// exponent/mantissa split.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "exmy/tensor.hpp"

namespace exmy {

using Decomposition = std::vector<int>;

// Set bits of k, descending. Throws ErrorCode::kUnsupportedWidth outside
// [1, 15].
Decomposition decompose(int k);

struct Segment {
  int width = 0;                    // 1, 2, 4 or 8 bits per element
  std::vector<std::uint8_t> bytes;  // width bytes per container

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct PackedSegments {
  int k = 0;
  Index rows = 0;  // source rows, multiple of 8
  Index cols = 0;
  std::vector<Segment> segments;  // descending width

  Index group_rows() const { return rows / 8; }
  std::uint64_t element_count() const {
    return static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols);
  }
  std::uint64_t payload_bits() const;

  friend bool operator==(const PackedSegments&, const PackedSegments&) = default;
};

// Segment s as a (rows / 8, cols) matrix of its containers: uint8 for w=1,
// uint16 for w=2, uint32 for w=4, uint64 for w=8. Little-endian hosts only.
template <typename Container>
Eigen::Map<const Tensor2<Container>> segment_matrix(const PackedSegments& ps,
                                                    std::size_t s);

// Flat array of n codes, n a multiple of 8. Same layout as pack_rows on an
// (n, 1) column. Throws kUnsupportedWidth, kLengthNotMultipleOf8,
// kCodeOutOfRange.
PackedSegments pack(std::span<const std::uint32_t> codes, int k);

// Throws ErrorCode::kSizeMismatch when ps does not describe (k, n).
std::vector<std::uint32_t> unpack(const PackedSegments& ps, int k,
                                  std::uint64_t n);

// (8R, C) codes to per-segment (R, C) container planes. Throws
// kUnsupportedWidth, kRowsNotMultipleOf8, kCodeOutOfRange.
PackedSegments pack_rows(const CodeMatrix& codes, int k);

// Inverse of pack_rows. Throws ErrorCode::kSizeMismatch.
CodeMatrix unpack_rows(const PackedSegments& ps);

// Column-wise packing of an (R, 8C) array: the planes describe the
// transpose, so ps.rows == 8C and ps.cols == R.
PackedSegments pack_cols(const CodeMatrix& codes, int k);
CodeMatrix unpack_cols(const PackedSegments& ps);

// Packed rows [row_begin, row_end) x cols [col_begin, col_end) of the source
// tensor, cut straight out of the packed planes. Row bounds must be
// multiples of 8. Throws ErrorCode::kUnalignedShard.
PackedSegments shard_view(const PackedSegments& ps, Index row_begin,
                          Index row_end, Index col_begin, Index col_end);

}  // namespace exmy

#endif  // EXMY_BITPACK_HPP_
