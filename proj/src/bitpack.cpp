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

#include "exmy/bitpack.hpp"

#include <bit>
#include <string>

#include "exmy/error.hpp"

namespace exmy {
namespace {

void check_width(int k) {
  if (k < 1 || k > 15) {
    throw Error(ErrorCode::kUnsupportedWidth,
                "bit width " + std::to_string(k) + " outside [1, 15]");
  }
}

void store_le(std::uint8_t* dst, std::uint64_t v, int nbytes) {
  for (int b = 0; b < nbytes; ++b) dst[b] = static_cast<std::uint8_t>(v >> (8 * b));
}

std::uint64_t load_le(const std::uint8_t* src, int nbytes) {
  std::uint64_t v = 0;
  for (int b = 0; b < nbytes; ++b) v |= std::uint64_t{src[b]} << (8 * b);
  return v;
}

// Bit position of the lowest code bit carried by each segment.
std::vector<int> segment_shifts(const Decomposition& d, int k) {
  std::vector<int> shifts;
  int hi = k;
  for (int w : d) {
    hi -= w;
    shifts.push_back(hi);
  }
  return shifts;
}

void check_layout(const PackedSegments& ps) {
  check_width(ps.k);
  const Decomposition d = decompose(ps.k);
  if (ps.rows < 0 || ps.cols < 0 || ps.rows % 8 != 0 ||
      ps.segments.size() != d.size()) {
    throw Error(ErrorCode::kSizeMismatch, "packed layout does not match width");
  }
  const auto containers =
      static_cast<std::size_t>(ps.group_rows() * ps.cols);
  for (std::size_t s = 0; s < d.size(); ++s) {
    if (ps.segments[s].width != d[s] ||
        ps.segments[s].bytes.size() != containers * static_cast<std::size_t>(d[s])) {
      throw Error(ErrorCode::kSizeMismatch,
                  "segment " + std::to_string(s) + " has wrong size");
    }
  }
}

}  // namespace

Decomposition decompose(int k) {
  check_width(k);
  Decomposition d;
  for (int w = 8; w >= 1; w >>= 1) {
    if (k & w) d.push_back(w);
  }
  return d;
}

std::uint64_t PackedSegments::payload_bits() const {
  std::uint64_t bits = 0;
  for (const Segment& s : segments) bits += 8 * s.bytes.size();
  return bits;
}

template <typename Container>
Eigen::Map<const Tensor2<Container>> segment_matrix(const PackedSegments& ps,
                                                    std::size_t s) {
  static_assert(std::endian::native == std::endian::little);
  const Segment& seg = ps.segments.at(s);
  if (static_cast<int>(sizeof(Container)) != seg.width) {
    throw Error(ErrorCode::kSizeMismatch,
                "container type does not match segment width");
  }
  return Eigen::Map<const Tensor2<Container>>(
      reinterpret_cast<const Container*>(seg.bytes.data()), ps.group_rows(),
      ps.cols);
}

template Eigen::Map<const Tensor2<std::uint8_t>> segment_matrix(
    const PackedSegments&, std::size_t);
template Eigen::Map<const Tensor2<std::uint16_t>> segment_matrix(
    const PackedSegments&, std::size_t);
template Eigen::Map<const Tensor2<std::uint32_t>> segment_matrix(
    const PackedSegments&, std::size_t);
template Eigen::Map<const Tensor2<std::uint64_t>> segment_matrix(
    const PackedSegments&, std::size_t);

PackedSegments pack_rows(const CodeMatrix& codes, int k) {
  check_width(k);
  if (codes.rows() % 8 != 0) {
    throw Error(ErrorCode::kRowsNotMultipleOf8,
                std::to_string(codes.rows()) + " rows");
  }
  const Decomposition d = decompose(k);
  const std::vector<int> shifts = segment_shifts(d, k);
  const std::uint32_t limit = std::uint32_t{1} << k;

  PackedSegments ps;
  ps.k = k;
  ps.rows = codes.rows();
  ps.cols = codes.cols();
  const Index groups = ps.group_rows();
  for (int w : d) {
    ps.segments.push_back(
        {w, std::vector<std::uint8_t>(static_cast<std::size_t>(groups * ps.cols * w))});
  }

  for (Index g = 0; g < groups; ++g) {
    for (Index c = 0; c < ps.cols; ++c) {
      std::uint32_t lanes[8];
      for (int i = 0; i < 8; ++i) {
        lanes[i] = codes(8 * g + i, c);
        if (lanes[i] >= limit) {
          throw Error(ErrorCode::kCodeOutOfRange,
                      "code " + std::to_string(lanes[i]) + " wider than " +
                          std::to_string(k) + " bits");
        }
      }
      const auto container = static_cast<std::size_t>(g * ps.cols + c);
      for (std::size_t s = 0; s < d.size(); ++s) {
        const int w = d[s];
        const std::uint32_t mask = (std::uint32_t{1} << w) - 1u;
        std::uint64_t packed = 0;
        for (int i = 0; i < 8; ++i) {
          packed |= std::uint64_t{(lanes[i] >> shifts[s]) & mask} << (w * i);
        }
        store_le(ps.segments[s].bytes.data() + container * w, packed, w);
      }
    }
  }
  return ps;
}

CodeMatrix unpack_rows(const PackedSegments& ps) {
  check_layout(ps);
  const Decomposition d = decompose(ps.k);
  const std::vector<int> shifts = segment_shifts(d, ps.k);
  CodeMatrix codes = CodeMatrix::Zero(ps.rows, ps.cols);
  for (Index g = 0; g < ps.group_rows(); ++g) {
    for (Index c = 0; c < ps.cols; ++c) {
      const auto container = static_cast<std::size_t>(g * ps.cols + c);
      for (std::size_t s = 0; s < d.size(); ++s) {
        const int w = d[s];
        const std::uint64_t packed =
            load_le(ps.segments[s].bytes.data() + container * w, w);
        const std::uint64_t mask = (std::uint64_t{1} << w) - 1u;
        for (int i = 0; i < 8; ++i) {
          codes(8 * g + i, c) |=
              static_cast<std::uint32_t>((packed >> (w * i)) & mask) << shifts[s];
        }
      }
    }
  }
  return codes;
}

PackedSegments pack(std::span<const std::uint32_t> codes, int k) {
  check_width(k);
  if (codes.size() % 8 != 0) {
    throw Error(ErrorCode::kLengthNotMultipleOf8,
                std::to_string(codes.size()) + " elements");
  }
  const CodeMatrix column = Eigen::Map<const CodeMatrix>(
      codes.data(), static_cast<Index>(codes.size()), 1);
  return pack_rows(column, k);
}

std::vector<std::uint32_t> unpack(const PackedSegments& ps, int k,
                                  std::uint64_t n) {
  if (ps.k != k || ps.element_count() != n || (n > 0 && ps.cols != 1)) {
    throw Error(ErrorCode::kSizeMismatch,
                "packed data holds " + std::to_string(ps.element_count()) +
                    " codes of " + std::to_string(ps.k) + " bits");
  }
  const CodeMatrix codes = unpack_rows(ps);
  return {codes.data(), codes.data() + codes.size()};
}

PackedSegments pack_cols(const CodeMatrix& codes, int k) {
  return pack_rows(codes.transpose(), k);
}

CodeMatrix unpack_cols(const PackedSegments& ps) {
  return unpack_rows(ps).transpose();
}

PackedSegments shard_view(const PackedSegments& ps, Index row_begin,
                          Index row_end, Index col_begin, Index col_end) {
  check_layout(ps);
  if (row_begin % 8 != 0 || row_end % 8 != 0 || row_begin < 0 ||
      row_end > ps.rows || row_begin > row_end || col_begin < 0 ||
      col_end > ps.cols || col_begin > col_end) {
    throw Error(ErrorCode::kUnalignedShard,
                "rows [" + std::to_string(row_begin) + ", " +
                    std::to_string(row_end) + ") cols [" +
                    std::to_string(col_begin) + ", " + std::to_string(col_end) +
                    ") of (" + std::to_string(ps.rows) + ", " +
                    std::to_string(ps.cols) + ")");
  }
  PackedSegments shard;
  shard.k = ps.k;
  shard.rows = row_end - row_begin;
  shard.cols = col_end - col_begin;
  const Index g0 = row_begin / 8;
  for (const Segment& seg : ps.segments) {
    const auto w = static_cast<std::size_t>(seg.width);
    Segment out{seg.width, {}};
    out.bytes.reserve(static_cast<std::size_t>(shard.group_rows() * shard.cols) * w);
    for (Index g = g0; g < g0 + shard.group_rows(); ++g) {
      const auto first = seg.bytes.begin() +
                         static_cast<std::ptrdiff_t>((g * ps.cols + col_begin) * seg.width);
      out.bytes.insert(out.bytes.end(), first,
                       first + static_cast<std::ptrdiff_t>(shard.cols * seg.width));
    }
    shard.segments.push_back(std::move(out));
  }
  return shard;
}

}  // namespace exmy
