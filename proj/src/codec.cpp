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

#include "exmy/codec.hpp"

#include <algorithm>
#include <string>

#include "exmy/error.hpp"

namespace exmy {

PackedTensor encode_tensor(const Tensor2f& t, const Dims& dims,
                           const FormatSpec& fmt, const BlockConfig& cfg) {
  fmt.validate();
  const Shape2D shape = view_2d(dims);
  if (shape.rows != t.rows() || shape.cols != t.cols()) {
    throw Error(ErrorCode::kSizeMismatch,
                "dims do not flatten to the tensor's (rows, cols)");
  }
  if (fmt.bits() > 15) {
    throw Error(ErrorCode::kUnsupportedWidth,
                fmt.name() + " is wider than 15 bits");
  }
  if (t.rows() % 8 != 0) {
    throw Error(ErrorCode::kRowsNotMultipleOf8,
                std::to_string(t.rows()) + " rows");
  }
  QuantizedTensor qt = quantize_tensor(t, fmt, cfg);
  PackedTensor pt;
  pt.fmt = fmt;
  pt.config = cfg;
  pt.dims = dims;
  pt.metadata = std::move(qt.metadata);
  pt.segments = pack_rows(qt.codes, fmt.bits());
  pt.specials = std::move(qt.specials);
  return pt;
}

Tensor2f decode_tensor(const PackedTensor& pt) {
  const Shape2D shape = pt.shape();
  if (pt.segments.k != pt.fmt.bits() || pt.segments.rows != shape.rows ||
      pt.segments.cols != shape.cols) {
    throw Error(ErrorCode::kCorruptContainer,
                "packed segments do not match dims and format");
  }
  QuantizedTensor qt;
  try {
    qt.codes = unpack_rows(pt.segments);
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruptContainer, e.what());
  }
  qt.metadata = pt.metadata;
  qt.specials = pt.specials;
  try {
    return dequantize_tensor(qt, pt.fmt, pt.config);
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruptContainer, e.what());
  }
}

PackedTensor shard_tensor(const PackedTensor& pt, Index row_begin,
                          Index row_end, Index col_begin, Index col_end) {
  const Shape2D shape = pt.shape();
  if (pt.metadata.size() != block_regions(shape, pt.config.shape).size()) {
    throw Error(ErrorCode::kCorruptContainer, "metadata count != block count");
  }
  PackedTensor out;
  out.fmt = pt.fmt;
  out.config = pt.config;
  // Validates alignment to packed row groups.
  out.segments = shard_view(pt.segments, row_begin, row_end, col_begin, col_end);
  const Index rows = row_end - row_begin;
  const Index cols = col_end - col_begin;
  out.dims = {static_cast<std::uint32_t>(rows), static_cast<std::uint32_t>(cols)};

  auto unaligned = [&](const char* why) {
    return Error(ErrorCode::kUnalignedShard,
                 pt.config.shape.name() + " shard " + why);
  };
  // A whole-tensor block stays one block; every other shape keeps its blocks
  // intact, so the shard's block grid is the cut-out part of the original.
  const BlockShape& bs = pt.config.shape;
  switch (bs.kind) {
    case BlockShape::Kind::kTensor:
      out.metadata = {pt.metadata.at(0)};
      break;
    case BlockShape::Kind::kRow:
      out.metadata.assign(pt.metadata.begin() + row_begin,
                          pt.metadata.begin() + row_end);
      break;
    case BlockShape::Kind::kColumn:
      out.metadata.assign(pt.metadata.begin() + col_begin,
                          pt.metadata.begin() + col_end);
      break;
    case BlockShape::Kind::kSubRow: {
      if (col_begin % bs.length != 0 || col_end % bs.length != 0) {
        throw unaligned("splits a sub-row block");
      }
      const Index per_row = shape.cols / bs.length;
      for (Index r = row_begin; r < row_end; ++r) {
        for (Index c = col_begin / bs.length; c < col_end / bs.length; ++c) {
          out.metadata.push_back(pt.metadata.at(static_cast<std::size_t>(r * per_row + c)));
        }
      }
      break;
    }
    case BlockShape::Kind::kTile: {
      if (row_begin % bs.tile_rows != 0 || row_end % bs.tile_rows != 0 ||
          col_begin % bs.tile_cols != 0 || col_end % bs.tile_cols != 0) {
        throw unaligned("splits a tile");
      }
      const Index per_row = shape.cols / bs.tile_cols;
      for (Index r = row_begin / bs.tile_rows; r < row_end / bs.tile_rows; ++r) {
        for (Index c = col_begin / bs.tile_cols; c < col_end / bs.tile_cols; ++c) {
          out.metadata.push_back(pt.metadata.at(static_cast<std::size_t>(r * per_row + c)));
        }
      }
      break;
    }
  }
  for (const SpecialValue& s : pt.specials) {
    const auto r = static_cast<Index>(s.index) / shape.cols;
    const auto c = static_cast<Index>(s.index) % shape.cols;
    if (r >= row_begin && r < row_end && c >= col_begin && c < col_end) {
      out.specials.push_back(
          {static_cast<std::uint64_t>((r - row_begin) * cols + (c - col_begin)),
           s.bits});
    }
  }
  return out;
}

}  // namespace exmy
