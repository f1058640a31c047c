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

#include "exmy/block.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "exmy/error.hpp"

namespace exmy {
namespace {

bool is_special(float v) { return !std::isfinite(v); }

float abs_max_finite(std::span<const float> block) {
  float amax = 0.0f;
  for (float v : block) {
    if (!is_special(v)) amax = std::max(amax, std::fabs(v));
  }
  return amax;
}

float to_scale(float amax, ScaleType type) {
  if (type == ScaleType::kFloat32) return amax;
  const std::uint32_t bits = std::bit_cast<std::uint32_t>(amax);
  std::uint32_t rounded = round_mantissa_rtne(bits, 7);
  if ((rounded & 0x7f800000u) == 0x7f800000u) rounded = bits & 0xffff0000u;
  return std::bit_cast<float>(rounded);
}

Index parse_index(std::string_view s, std::string_view full) {
  Index v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end || v < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "bad block shape '" + std::string(full) + "'");
  }
  return v;
}

Outcome classify(const EncodeResult& r, double value, const FormatSpec& fmt) {
  if (r.saturated) return Outcome::kSaturated;
  const std::uint32_t idx = magnitude_index(r.code, fmt);
  if (idx == 0) return value != 0.0 ? Outcome::kFlushed : Outcome::kRounded;
  if (fmt.max_normal_exponent() >= 1 && exponent_field(r.code, fmt) == 0) {
    return Outcome::kSubnormal;
  }
  return Outcome::kRounded;
}

}  // namespace

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::kMaxExpBeforeRounding: return "max-before";
    case Scheme::kMaxExpAfterRounding: return "max-after";
    case Scheme::kFloatScaling: return "float-scale";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view text) {
  if (text == "max-before") return Scheme::kMaxExpBeforeRounding;
  if (text == "max-after") return Scheme::kMaxExpAfterRounding;
  if (text == "float-scale") return Scheme::kFloatScaling;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown scheme '" + std::string(text) + "'");
}

std::string BlockShape::name() const {
  switch (kind) {
    case Kind::kTensor: return "tensor";
    case Kind::kRow: return "row";
    case Kind::kColumn: return "col";
    case Kind::kSubRow: return "subrow:" + std::to_string(length);
    case Kind::kTile:
      return "tile:" + std::to_string(tile_rows) + "x" +
             std::to_string(tile_cols);
  }
  return "unknown";
}

BlockShape BlockShape::parse(std::string_view text) {
  if (text == "tensor") return tensor();
  if (text == "row") return row();
  if (text == "col") return column();
  if (text.starts_with("subrow:")) {
    return sub_row(parse_index(text.substr(7), text));
  }
  if (text.starts_with("tile:")) {
    const auto dims = text.substr(5);
    const auto x = dims.find('x');
    if (x == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  "bad block shape '" + std::string(text) + "'");
    }
    return tile(parse_index(dims.substr(0, x), text),
                parse_index(dims.substr(x + 1), text));
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown block shape '" + std::string(text) + "'");
}

BlockMetadata compute_metadata(std::span<const float> block,
                               const FormatSpec& fmt, Scheme scheme,
                               ScaleType scale_type) {
  if (block.empty()) throw Error(ErrorCode::kEmptyBlock, "block has no elements");
  const float amax = abs_max_finite(block);
  BlockMetadata meta;
  switch (scheme) {
    case Scheme::kMaxExpBeforeRounding:
      meta.max_biased_exponent = static_cast<std::uint8_t>(biased_exponent(amax));
      break;
    case Scheme::kMaxExpAfterRounding: {
      // Rounding is monotone, so the rounded block max carries the largest
      // rounded exponent. A carry past the fp32 range stays at 254.
      const int e = biased_exponent(round_mantissa_rtne(amax, fmt.y));
      meta.max_biased_exponent = static_cast<std::uint8_t>(std::min(e, 254));
      break;
    }
    case Scheme::kFloatScaling:
      meta.max_biased_exponent = 127;
      meta.scale = to_scale(amax, scale_type);
      break;
  }
  return meta;
}

QuantizedBlock quantize_block(std::span<const float> block,
                              const FormatSpec& fmt, Scheme scheme,
                              ScaleType scale_type,
                              std::vector<Outcome>* outcomes) {
  fmt.validate();
  QuantizedBlock qb;
  qb.meta = compute_metadata(block, fmt, scheme, scale_type);
  const ExponentOffset off{qb.meta.max_biased_exponent};
  // Float scaling maps [-scale, scale] onto [-L, L].
  const bool scaled_block = scheme == Scheme::kFloatScaling;
  const double largest = scaled_block ? largest_normal(fmt, off) : 0.0;
  const bool degenerate = scaled_block && (largest == 0.0 || *qb.meta.scale == 0.0f);
  qb.codes.resize(block.size());
  if (outcomes) outcomes->resize(block.size());
  for (std::size_t i = 0; i < block.size(); ++i) {
    const float v = block[i];
    if (is_special(v)) {
      qb.specials.push_back({i, std::bit_cast<std::uint32_t>(v)});
      if (outcomes) (*outcomes)[i] = Outcome::kSpecial;
      continue;
    }
    double scaled = v;
    if (degenerate) {
      scaled = std::copysign(0.0, v);
    } else if (scaled_block) {
      scaled = (static_cast<double>(v) * largest) / *qb.meta.scale;
    }
    const EncodeResult r = encode_detailed(scaled, fmt, off);
    qb.codes[i] = r.code;
    if (outcomes) (*outcomes)[i] = classify(r, scaled, fmt);
  }
  return qb;
}

float dequantize_value(ExmyCode code, const FormatSpec& fmt,
                       const BlockMetadata& meta, Scheme scheme) {
  const ExponentOffset off{meta.max_biased_exponent};
  double d = decode(code, fmt, off);
  if (scheme == Scheme::kFloatScaling) {
    const double largest = largest_normal(fmt, off);
    if (largest != 0.0) d = (d * static_cast<double>(*meta.scale)) / largest;
  }
  return static_cast<float>(d);
}

std::vector<float> dequantize_block(const QuantizedBlock& qb,
                                    const FormatSpec& fmt, Scheme scheme) {
  fmt.validate();
  if (qb.meta.scale.has_value() != (scheme == Scheme::kFloatScaling)) {
    throw Error(ErrorCode::kMalformedBlock,
                "scale presence does not match scheme");
  }
  std::vector<float> out(qb.codes.size());
  for (std::size_t i = 0; i < qb.codes.size(); ++i) {
    try {
      out[i] = dequantize_value(qb.codes[i], fmt, qb.meta, scheme);
    } catch (const Error& e) {
      throw Error(ErrorCode::kMalformedBlock, e.what());
    }
  }
  for (const SpecialValue& s : qb.specials) {
    if (s.index >= out.size()) {
      throw Error(ErrorCode::kMalformedBlock, "special index out of range");
    }
    out[s.index] = std::bit_cast<float>(s.bits);
  }
  return out;
}

std::vector<BlockRegion> block_regions(Shape2D shape, const BlockShape& bs) {
  const Index R = shape.rows;
  const Index C = shape.cols;
  if (R < 1 || C < 1) {
    throw Error(ErrorCode::kEmptyBlock, "tensor has no elements");
  }
  auto mismatch = [&](const std::string& why) {
    return Error(ErrorCode::kBlockShapeMismatch,
                 bs.name() + " on (" + std::to_string(R) + ", " +
                     std::to_string(C) + "): " + why);
  };
  std::vector<BlockRegion> regions;
  switch (bs.kind) {
    case BlockShape::Kind::kTensor:
      regions.push_back({0, 0, R, C});
      break;
    case BlockShape::Kind::kRow:
      for (Index r = 0; r < R; ++r) regions.push_back({r, 0, 1, C});
      break;
    case BlockShape::Kind::kColumn:
      for (Index c = 0; c < C; ++c) regions.push_back({0, c, R, 1});
      break;
    case BlockShape::Kind::kSubRow:
      if (bs.length < 1) throw mismatch("sub-row length must be >= 1");
      if (C % bs.length != 0) throw mismatch("length does not divide columns");
      for (Index r = 0; r < R; ++r) {
        for (Index c = 0; c < C; c += bs.length) {
          regions.push_back({r, c, 1, bs.length});
        }
      }
      break;
    case BlockShape::Kind::kTile:
      if (bs.tile_rows < 1 || bs.tile_cols < 1) {
        throw mismatch("tile dims must be >= 1");
      }
      if (R % bs.tile_rows != 0 || C % bs.tile_cols != 0) {
        throw mismatch("tile does not divide tensor");
      }
      for (Index r = 0; r < R; r += bs.tile_rows) {
        for (Index c = 0; c < C; c += bs.tile_cols) {
          regions.push_back({r, c, bs.tile_rows, bs.tile_cols});
        }
      }
      break;
  }
  return regions;
}

QuantizedTensor quantize_tensor(const Tensor2f& t, const FormatSpec& fmt,
                                const BlockConfig& cfg,
                                std::vector<Outcome>* outcomes) {
  fmt.validate();
  const auto regions = block_regions({t.rows(), t.cols()}, cfg.shape);
  QuantizedTensor qt;
  qt.codes.resize(t.rows(), t.cols());
  qt.metadata.reserve(regions.size());
  if (outcomes) outcomes->assign(static_cast<std::size_t>(t.size()), Outcome::kRounded);

  std::vector<float> scratch;
  std::vector<Outcome> block_outcomes;
  for (const BlockRegion& b : regions) {
    const auto view = t.block(b.row, b.col, b.rows, b.cols);
    scratch.resize(static_cast<std::size_t>(b.rows * b.cols));
    Eigen::Map<Tensor2f>(scratch.data(), b.rows, b.cols) = view;

    QuantizedBlock qb = quantize_block(scratch, fmt, cfg.scheme, cfg.scale_type,
                                       outcomes ? &block_outcomes : nullptr);
    for (Index i = 0; i < b.rows; ++i) {
      for (Index j = 0; j < b.cols; ++j) {
        const auto local = static_cast<std::size_t>(i * b.cols + j);
        qt.codes(b.row + i, b.col + j) = qb.codes[local].bits;
        if (outcomes) {
          (*outcomes)[static_cast<std::size_t>((b.row + i) * t.cols() + b.col + j)] =
              block_outcomes[local];
        }
      }
    }
    for (const SpecialValue& s : qb.specials) {
      const auto i = static_cast<Index>(s.index) / b.cols;
      const auto j = static_cast<Index>(s.index) % b.cols;
      qt.specials.push_back(
          {static_cast<std::uint64_t>((b.row + i) * t.cols() + b.col + j), s.bits});
    }
    qt.metadata.push_back(qb.meta);
  }
  std::sort(qt.specials.begin(), qt.specials.end(),
            [](const SpecialValue& a, const SpecialValue& b) {
              return a.index < b.index;
            });
  return qt;
}

Tensor2f dequantize_tensor(const QuantizedTensor& qt, const FormatSpec& fmt,
                           const BlockConfig& cfg) {
  fmt.validate();
  const Shape2D shape{qt.codes.rows(), qt.codes.cols()};
  const auto regions = block_regions(shape, cfg.shape);
  if (regions.size() != qt.metadata.size()) {
    throw Error(ErrorCode::kMalformedBlock,
                "metadata count " + std::to_string(qt.metadata.size()) +
                    " != block count " + std::to_string(regions.size()));
  }
  Tensor2f out(shape.rows, shape.cols);
  for (std::size_t k = 0; k < regions.size(); ++k) {
    const BlockRegion& b = regions[k];
    const BlockMetadata& meta = qt.metadata[k];
    if (meta.scale.has_value() != (cfg.scheme == Scheme::kFloatScaling)) {
      throw Error(ErrorCode::kMalformedBlock,
                  "scale presence does not match scheme");
    }
    for (Index i = b.row; i < b.row + b.rows; ++i) {
      for (Index j = b.col; j < b.col + b.cols; ++j) {
        out(i, j) = dequantize_value(ExmyCode{qt.codes(i, j)}, fmt, meta,
                                     cfg.scheme);
      }
    }
  }
  const auto n = static_cast<std::uint64_t>(out.size());
  for (const SpecialValue& s : qt.specials) {
    if (s.index >= n) {
      throw Error(ErrorCode::kMalformedBlock, "special index out of range");
    }
    out.data()[s.index] = std::bit_cast<float>(s.bits);
  }
  return out;
}

}  // namespace exmy
