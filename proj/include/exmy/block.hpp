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

#ifndef EXMY_BLOCK_HPP_
#define EXMY_BLOCK_HPP_

// Block-wise quantization: per-block exponent metadata under three schemes,
// quantize/dequantize of single blocks and whole 2D tensors, and emulation
// (quantize then dequantize back to fp32). NaN and Inf never enter the code
// stream; they ride alongside as (index, fp32 bits) pairs.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exmy/format.hpp"
#include "exmy/tensor.hpp"

namespace exmy {

enum class Scheme : std::uint8_t {
  kMaxExpBeforeRounding = 0,
  kMaxExpAfterRounding = 1,
  kFloatScaling = 2,
};

// "max-before" | "max-after" | "float-scale"
std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view text);

enum class ScaleType : std::uint8_t { kFloat32, kBfloat16 };

struct BlockShape {
  enum class Kind : std::uint8_t {
    kTensor = 0,
    kRow = 1,
    kColumn = 2,
    kSubRow = 3,
    kTile = 4,
  };

  Kind kind = Kind::kTensor;
  Index length = 0;     // sub-row length
  Index tile_rows = 0;
  Index tile_cols = 0;

  static BlockShape tensor() { return {}; }
  static BlockShape row() { return {Kind::kRow}; }
  static BlockShape column() { return {Kind::kColumn}; }
  static BlockShape sub_row(Index length) { return {Kind::kSubRow, length}; }
  static BlockShape tile(Index rows, Index cols) {
    return {Kind::kTile, 0, rows, cols};
  }

  // "tensor" | "row" | "col" | "subrow:L" | "tile:RxC"
  std::string name() const;
  static BlockShape parse(std::string_view text);

  friend bool operator==(const BlockShape&, const BlockShape&) = default;
};

struct BlockConfig {
  Scheme scheme = Scheme::kMaxExpBeforeRounding;
  BlockShape shape = BlockShape::tensor();
  ScaleType scale_type = ScaleType::kFloat32;

  friend bool operator==(const BlockConfig&, const BlockConfig&) = default;
};

struct BlockMetadata {
  std::uint8_t max_biased_exponent = 0;
  // Float scaling only: the block's absolute maximum, which the format's
  // largest normal maps onto. Effective multiplier is scale / largest_normal.
  std::optional<float> scale;

  friend bool operator==(const BlockMetadata&, const BlockMetadata&) = default;
};

struct SpecialValue {
  std::uint64_t index = 0;  // flat, row-major
  std::uint32_t bits = 0;   // original fp32 pattern

  friend bool operator==(const SpecialValue&, const SpecialValue&) = default;
};

struct QuantizedBlock {
  std::vector<ExmyCode> codes;
  BlockMetadata meta;
  std::vector<SpecialValue> specials;  // codes at these indices are zero
};

// What quantization did to one element.
enum class Outcome : std::uint8_t {
  kRounded,    // landed on the grid, exactly or after rounding
  kSaturated,  // clamped to the largest normal
  kSubnormal,  // nonzero result in the subnormal range
  kFlushed,    // nonzero input that became zero
  kSpecial,    // NaN/Inf carried out of band
};

// Throws ErrorCode::kEmptyBlock.
BlockMetadata compute_metadata(std::span<const float> block,
                               const FormatSpec& fmt, Scheme scheme,
                               ScaleType scale_type = ScaleType::kFloat32);

// Throws ErrorCode::kEmptyBlock. When outcomes is given it receives one
// entry per element.
QuantizedBlock quantize_block(std::span<const float> block,
                              const FormatSpec& fmt, Scheme scheme,
                              ScaleType scale_type = ScaleType::kFloat32,
                              std::vector<Outcome>* outcomes = nullptr);

// Throws ErrorCode::kMalformedBlock.
std::vector<float> dequantize_block(const QuantizedBlock& qb,
                                    const FormatSpec& fmt, Scheme scheme);

// Scalar decode of one element against its block metadata.
float dequantize_value(ExmyCode code, const FormatSpec& fmt,
                       const BlockMetadata& meta, Scheme scheme);

struct BlockRegion {
  Index row = 0;
  Index col = 0;
  Index rows = 0;
  Index cols = 0;
};

// Blocks of a (rows, cols) tensor in row-major order over the block grid.
// Throws ErrorCode::kBlockShapeMismatch for ragged or degenerate tilings.
std::vector<BlockRegion> block_regions(Shape2D shape, const BlockShape& bs);

struct QuantizedTensor {
  CodeMatrix codes;
  std::vector<BlockMetadata> metadata;  // block scan order
  std::vector<SpecialValue> specials;   // sorted by flat index
};

QuantizedTensor quantize_tensor(const Tensor2f& t, const FormatSpec& fmt,
                                const BlockConfig& cfg,
                                std::vector<Outcome>* outcomes = nullptr);

Tensor2f dequantize_tensor(const QuantizedTensor& qt, const FormatSpec& fmt,
                           const BlockConfig& cfg);

// quantize then dequantize, blockwise; shape preserved. Accepts any dense
// expression with float or bfloat16 scalars.
template <typename Derived>
Tensor2f emulate_tensor(const Eigen::MatrixBase<Derived>& t,
                        const FormatSpec& fmt, const BlockConfig& cfg) {
  return dequantize_tensor(quantize_tensor(to_float(t), fmt, cfg), fmt, cfg);
}

template <typename Derived>
Tensor2f emulate_tensor(const Eigen::MatrixBase<Derived>& t,
                        const FormatSpec& fmt, Scheme scheme,
                        const BlockShape& bs) {
  return emulate_tensor(t, fmt, BlockConfig{scheme, bs});
}

}  // namespace exmy

#endif  // EXMY_BLOCK_HPP_
