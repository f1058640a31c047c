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

#ifndef EXMY_FORMAT_HPP_
#define EXMY_FORMAT_HPP_

// eXmY formats: 1 sign bit, X exponent bits, Y mantissa bits, laid out
// MSB to LSB as [sign | exponent | mantissa]. The exponent bias is not part
// of the format; it is supplied per block as an ExponentOffset.

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace exmy {

struct FormatSpec {
  int x = 0;  // exponent bits, 0..8
  int y = 0;  // mantissa bits, 0..23
  // Reserve the all-ones exponent for Inf/NaN. Off for serving formats.
  bool supports_specials = false;

  int bits() const { return 1 + x + y; }

  // Largest exponent field value that encodes a finite normal. Zero when the
  // format has no normals (x == 0, or x == 1 with specials reserved).
  int max_normal_exponent() const {
    return (1 << x) - 1 - (supports_specials ? 1 : 0);
  }

  // Throws ErrorCode::kInvalidFormat.
  void validate() const;

  // "e3m2", lowercase.
  std::string name() const;

  // Case-insensitive "eXmY". Throws ErrorCode::kInvalidFormat.
  static FormatSpec parse(std::string_view text);

  friend bool operator==(const FormatSpec&, const FormatSpec&) = default;
};

// One encoded element. Only the low bits() bits are significant.
struct ExmyCode {
  std::uint32_t bits = 0;

  friend bool operator==(ExmyCode, ExmyCode) = default;
  friend auto operator<=>(ExmyCode, ExmyCode) = default;
};

// The 8-bit block metadata: the fp32-convention biased exponent that the
// format's largest normal exponent code maps onto.
struct ExponentOffset {
  int max_biased_exponent = 127;

  // Throws ErrorCode::kInvalidArgument outside [0, 255].
  void validate() const;

  friend bool operator==(ExponentOffset, ExponentOffset) = default;
};

// Bias shift applied to exponent codes: value exponent = e + offset - 127.
int decode_offset(const FormatSpec& fmt, ExponentOffset off);

// Unsigned magnitude part of a code, (exponent << y) | mantissa. Magnitude
// indices are ordered the same way as the values they decode to.
inline std::uint32_t magnitude_index(ExmyCode code, const FormatSpec& fmt) {
  return code.bits & ((std::uint32_t{1} << (fmt.x + fmt.y)) - 1u);
}
inline bool sign_bit(ExmyCode code, const FormatSpec& fmt) {
  return ((code.bits >> (fmt.x + fmt.y)) & 1u) != 0;
}
inline std::uint32_t exponent_field(ExmyCode code, const FormatSpec& fmt) {
  return magnitude_index(code, fmt) >> fmt.y;
}
inline std::uint32_t mantissa_field(ExmyCode code, const FormatSpec& fmt) {
  return code.bits & ((std::uint32_t{1} << fmt.y) - 1u);
}

// Largest finite magnitude index of the format.
std::uint32_t max_magnitude_index(const FormatSpec& fmt);

// Exact decoded value. Every finite code fits a double without rounding.
// Specials decode to Inf/NaN only when fmt.supports_specials.
// Throws ErrorCode::kCodeOutOfRange when code.bits >= 2^k.
double decode(ExmyCode code, const FormatSpec& fmt, ExponentOffset off);

struct EncodeResult {
  ExmyCode code;
  bool saturated = false;  // |value| was above the largest normal
};

// Round-to-nearest-even onto the (fmt, off) grid. Saturates at the largest
// normal and flushes to signed zero below half the smallest subnormal step.
// Throws ErrorCode::kSpecialsNotRepresentable for NaN/Inf unless the format
// reserves special encodings.
EncodeResult encode_detailed(double value, const FormatSpec& fmt,
                             ExponentOffset off);

inline ExmyCode encode(double value, const FormatSpec& fmt,
                       ExponentOffset off) {
  return encode_detailed(value, fmt, off).code;
}

// Value of the largest finite code.
double largest_normal(const FormatSpec& fmt, ExponentOffset off);

// Round the fp32 mantissa to y bits, ties to even. NaN and Inf pass through
// untouched; finite values may carry into the exponent (and up to Inf).
std::uint32_t round_mantissa_rtne(std::uint32_t fp32_bits, int y);

inline float round_mantissa_rtne(float value, int y) {
  return std::bit_cast<float>(
      round_mantissa_rtne(std::bit_cast<std::uint32_t>(value), y));
}

inline int biased_exponent(float value) {
  return static_cast<int>((std::bit_cast<std::uint32_t>(value) >> 23) & 0xffu);
}

struct GridValues {
  std::vector<double> values;    // ascending, +0 and -0 reported once
  bool has_signed_zero = true;   // both zero encodings exist
};

// All finite values of the grid. Throws ErrorCode::kInvalidArgument for
// formats wider than 24 bits.
GridValues grid_values(const FormatSpec& fmt, ExponentOffset off);

// k-bit two's-complement reading of e0mY codes, e.g. e0m3 covers [-8, 7].
// Throws ErrorCode::kFormatMismatch when fmt.x != 0.
std::vector<std::int32_t> twos_complement_view(std::span<const ExmyCode> codes,
                                               const FormatSpec& fmt);

}  // namespace exmy

#endif  // EXMY_FORMAT_HPP_
