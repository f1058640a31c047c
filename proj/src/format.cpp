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

#include "exmy/format.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

#include "exmy/error.hpp"

namespace exmy {
namespace {

// Nearest integer to a nonnegative t, ties to even. Pure integer logic on
// the fractional part so the host rounding mode never matters.
std::uint64_t round_half_even(double t) {
  const double whole = std::floor(t);
  const double frac = t - whole;  // exact for t < 2^52
  auto n = static_cast<std::uint64_t>(whole);
  if (frac > 0.5 || (frac == 0.5 && (n & 1u) != 0)) ++n;
  return n;
}

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

void FormatSpec::validate() const {
  if (x < 0 || x > 8 || y < 0 || y > 23) {
    throw Error(ErrorCode::kInvalidFormat,
                "e" + std::to_string(x) + "m" + std::to_string(y) +
                    " outside e[0..8]m[0..23]");
  }
  if (supports_specials && x == 0) {
    throw Error(ErrorCode::kInvalidFormat,
                "special encodings need at least one exponent bit");
  }
}

std::string FormatSpec::name() const {
  return "e" + std::to_string(x) + "m" + std::to_string(y);
}

FormatSpec FormatSpec::parse(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  const auto m = lower.find('m');
  FormatSpec fmt;
  if (lower.size() < 4 || lower[0] != 'e' || m == std::string::npos ||
      !parse_int(std::string_view(lower).substr(1, m - 1), fmt.x) ||
      !parse_int(std::string_view(lower).substr(m + 1), fmt.y)) {
    throw Error(ErrorCode::kInvalidFormat,
                "cannot parse format '" + std::string(text) + "'");
  }
  fmt.validate();
  return fmt;
}

void ExponentOffset::validate() const {
  if (max_biased_exponent < 0 || max_biased_exponent > 255) {
    throw Error(ErrorCode::kInvalidArgument,
                "max biased exponent " + std::to_string(max_biased_exponent) +
                    " outside [0, 255]");
  }
}

int decode_offset(const FormatSpec& fmt, ExponentOffset off) {
  return off.max_biased_exponent - std::max(fmt.max_normal_exponent(), 0);
}

std::uint32_t max_magnitude_index(const FormatSpec& fmt) {
  const int top = std::max(fmt.max_normal_exponent(), 0);
  return static_cast<std::uint32_t>(
      ((std::uint64_t{1} << fmt.y) * static_cast<std::uint64_t>(top + 1)) - 1u);
}

double decode(ExmyCode code, const FormatSpec& fmt, ExponentOffset off) {
  if (fmt.bits() < 32 && code.bits >= (std::uint32_t{1} << fmt.bits())) {
    throw Error(ErrorCode::kCodeOutOfRange,
                "code does not fit " + std::to_string(fmt.bits()) + " bits");
  }
  const bool negative = sign_bit(code, fmt);
  const std::uint32_t e = exponent_field(code, fmt);
  const std::uint32_t m = mantissa_field(code, fmt);
  if (fmt.supports_specials && e == (std::uint32_t{1} << fmt.x) - 1u) {
    if (m == 0) {
      return negative ? -std::numeric_limits<double>::infinity()
                      : std::numeric_limits<double>::infinity();
    }
    return std::numeric_limits<double>::quiet_NaN();
  }
  const int step_exp = 1 + decode_offset(fmt, off) - 127 - fmt.y;
  const std::uint64_t significand =
      e == 0 ? m : (std::uint64_t{1} << fmt.y) + m;
  const int scale = step_exp + (e == 0 ? 0 : static_cast<int>(e) - 1);
  const double magnitude = std::ldexp(static_cast<double>(significand), scale);
  return negative ? -magnitude : magnitude;
}

EncodeResult encode_detailed(double value, const FormatSpec& fmt,
                             ExponentOffset off) {
  const std::uint32_t sign = std::signbit(value)
                                 ? (std::uint32_t{1} << (fmt.x + fmt.y))
                                 : 0u;
  if (!std::isfinite(value)) {
    const bool nan = std::isnan(value);
    if (!fmt.supports_specials || (nan && fmt.y == 0)) {
      throw Error(ErrorCode::kSpecialsNotRepresentable,
                  std::string(nan ? "NaN" : "Inf") + " has no encoding in " +
                      fmt.name());
    }
    const std::uint32_t all_ones = (std::uint32_t{1} << fmt.x) - 1u;
    if (nan) {
      return {ExmyCode{(all_ones << fmt.y) | (std::uint32_t{1} << (fmt.y - 1))},
              false};
    }
    return {ExmyCode{sign | (all_ones << fmt.y)}, false};
  }

  const int offset = decode_offset(fmt, off);
  const int top = fmt.max_normal_exponent();
  const std::uint64_t idx_max = max_magnitude_index(fmt);
  const double a = std::fabs(value);

  std::uint64_t idx = 0;
  if (a != 0.0) {
    int e2 = 0;
    std::frexp(a, &e2);
    const int floor_log2 = e2 - 1;
    const int min_normal_exp = 1 + offset - 127;
    if (top < 1 || floor_log2 < min_normal_exp) {
      // Linear region: subnormals, or every code of a format without normals.
      const double t = std::ldexp(a, -(min_normal_exp - fmt.y));
      idx = t >= 0x1p62 ? idx_max + 1 : round_half_even(t);
    } else {
      const std::int64_t e = std::int64_t{floor_log2} - offset + 127;
      if (e > top + 1) {
        idx = idx_max + 1;
      } else {
        const double r = std::ldexp(a, fmt.y - floor_log2);  // [2^y, 2^(y+1))
        idx = (static_cast<std::uint64_t>(e - 1) << fmt.y) + round_half_even(r);
      }
    }
  }
  const bool saturated = idx > idx_max;
  if (saturated) idx = idx_max;
  return {ExmyCode{sign | static_cast<std::uint32_t>(idx)}, saturated};
}

double largest_normal(const FormatSpec& fmt, ExponentOffset off) {
  return decode(ExmyCode{max_magnitude_index(fmt)}, fmt, off);
}

std::uint32_t round_mantissa_rtne(std::uint32_t bits, int y) {
  if (y < 0 || y > 23) {
    throw Error(ErrorCode::kInvalidArgument,
                "mantissa width " + std::to_string(y) + " outside [0, 23]");
  }
  if (y == 23 || (bits & 0x7f800000u) == 0x7f800000u) return bits;
  const int shift = 23 - y;
  // With no mantissa bits left the implicit leading digit is the last kept one.
  const std::uint32_t lsb =
      y == 0 ? std::uint32_t{(bits & 0x7f800000u) != 0} : (bits >> shift) & 1u;
  const std::uint32_t rounding_bias = (std::uint32_t{1} << (shift - 1)) - 1u + lsb;
  bits += rounding_bias;
  return bits & ~((std::uint32_t{1} << shift) - 1u);
}

GridValues grid_values(const FormatSpec& fmt, ExponentOffset off) {
  fmt.validate();
  off.validate();
  if (fmt.bits() > 24) {
    throw Error(ErrorCode::kInvalidArgument,
                "grid enumeration limited to 24-bit formats");
  }
  GridValues grid;
  const std::uint32_t codes = std::uint32_t{1} << fmt.bits();
  grid.values.reserve(codes);
  for (std::uint32_t c = 0; c < codes; ++c) {
    const double v = decode(ExmyCode{c}, fmt, off);
    if (std::isfinite(v)) grid.values.push_back(v == 0.0 ? 0.0 : v);
  }
  std::sort(grid.values.begin(), grid.values.end());
  grid.values.erase(std::unique(grid.values.begin(), grid.values.end()),
                    grid.values.end());
  return grid;
}

std::vector<std::int32_t> twos_complement_view(std::span<const ExmyCode> codes,
                                               const FormatSpec& fmt) {
  if (fmt.x != 0) {
    throw Error(ErrorCode::kFormatMismatch,
                fmt.name() + " is not an e0mY format");
  }
  const int k = fmt.bits();
  std::vector<std::int32_t> out;
  out.reserve(codes.size());
  for (const ExmyCode c : codes) {
    if (k < 32 && c.bits >= (std::uint32_t{1} << k)) {
      throw Error(ErrorCode::kCodeOutOfRange, "code wider than format");
    }
    const auto shift = 32 - k;
    out.push_back(static_cast<std::int32_t>(c.bits << shift) >> shift);
  }
  return out;
}

}  // namespace exmy
