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

#ifndef EXMY_CODEC_HPP_
#define EXMY_CODEC_HPP_

// Float tensor <-> packed eXmY tensor: blockwise quantization into staged
// codes plus per-block metadata, then power-of-2 packing along rows.

#include <span>
#include <vector>

#include "exmy/bitpack.hpp"
#include "exmy/block.hpp"
#include "exmy/format.hpp"
#include "exmy/tensor.hpp"

namespace exmy {

struct PackedTensor {
  FormatSpec fmt;
  BlockConfig config;
  Dims dims;
  std::vector<BlockMetadata> metadata;  // block scan order
  PackedSegments segments;
  std::vector<SpecialValue> specials;  // sorted by flat index

  Shape2D shape() const { return view_2d(dims); }

  friend bool operator==(const PackedTensor&, const PackedTensor&) = default;
};

// dims must flatten to t's (rows, cols). Throws kRowsNotMultipleOf8,
// kBlockShapeMismatch, kUnsupportedWidth, kSizeMismatch.
PackedTensor encode_tensor(const Tensor2f& t, const Dims& dims,
                           const FormatSpec& fmt, const BlockConfig& cfg);

template <typename Derived>
PackedTensor encode_tensor(const Eigen::MatrixBase<Derived>& t,
                           const FormatSpec& fmt, const BlockConfig& cfg) {
  const Dims dims{static_cast<std::uint32_t>(t.rows()),
                  static_cast<std::uint32_t>(t.cols())};
  return encode_tensor(to_float(t), dims, fmt, cfg);
}

// Row-major (R, C) fp32 tensor view of the decoded values. Throws
// ErrorCode::kCorruptContainer on internally inconsistent input.
Tensor2f decode_tensor(const PackedTensor& pt);

// Sub-tensor [row_begin, row_end) x [col_begin, col_end) with its own
// metadata, reconstructible on its own. Rows must align to packed groups of
// 8 and the cut must not split a block. Throws ErrorCode::kUnalignedShard.
PackedTensor shard_tensor(const PackedTensor& pt, Index row_begin,
                          Index row_end, Index col_begin, Index col_end);

}  // namespace exmy

#endif  // EXMY_CODEC_HPP_
