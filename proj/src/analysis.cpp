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

#include "exmy/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "exmy/error.hpp"

namespace exmy {
namespace {

int largest_populated(const ExponentHistogram& h) {
  for (int b = 255; b >= 1; --b) {
    if (h.counts[b] != 0) return b;
  }
  return 0;
}

std::uint64_t covered_by_top(const ExponentHistogram& h, int k) {
  const int top = largest_populated(h);
  std::uint64_t covered = 0;
  for (int b = top; b >= 1 && b > top - k; --b) covered += h.counts[b];
  return covered;
}

}  // namespace

ExponentHistogram& ExponentHistogram::operator+=(const ExponentHistogram& other) {
  for (std::size_t b = 0; b < counts.size(); ++b) counts[b] += other.counts[b];
  total += other.total;
  specials += other.specials;
  return *this;
}

ExponentHistogram histogram(std::span<const float> values) {
  ExponentHistogram h;
  h.total = values.size();
  for (float v : values) {
    const int e = biased_exponent(v);
    if (e == 255) {
      ++h.specials;
    } else {
      ++h.counts[static_cast<std::size_t>(e)];
    }
  }
  return h;
}

double top_k_coverage(const ExponentHistogram& h, int k) {
  const std::uint64_t nonzero = h.nonzero();
  if (nonzero == 0) return 1.0;
  return static_cast<double>(covered_by_top(h, k)) / static_cast<double>(nonzero);
}

double flush_fraction(const ExponentHistogram& h, int threshold) {
  const std::uint64_t finite = h.finite();
  if (finite == 0) return 0.0;
  std::uint64_t below = 0;
  for (int b = 0; b <= std::min(threshold, 255); ++b) below += h.counts[b];
  return static_cast<double>(below) / static_cast<double>(finite);
}

ExponentStats stats(const ExponentHistogram& h) {
  if (h.finite() == 0) {
    throw Error(ErrorCode::kEmptyHistogram, "no finite elements");
  }
  ExponentStats s;
  s.min_exponent = 255;
  std::uint64_t peak = 0;
  for (int b = 0; b < 256; ++b) {
    const std::uint64_t c = h.counts[b];
    if (c == 0) continue;
    ++s.populated_bins;
    s.min_exponent = std::min(s.min_exponent, b);
    s.max_exponent = b;
    if (c > peak) {
      peak = c;
      s.peak_exponent = b;
    }
  }
  s.lossless_exponent_bits =
      static_cast<int>(std::bit_width(static_cast<unsigned>(s.populated_bins - 1)));
  s.top_k_coverage.resize(256);
  s.flush_fraction.resize(256);
  for (int k = 0; k < 256; ++k) {
    s.top_k_coverage[k] = top_k_coverage(h, k);
    s.flush_fraction[k] = flush_fraction(h, k);
  }
  return s;
}

double proxy_nmse(const ExponentHistogram& h, const FormatSpec& fmt) {
  fmt.validate();
  const int anchor = largest_populated(h);
  const int offset = decode_offset(fmt, ExponentOffset{anchor});
  const bool has_normals = fmt.max_normal_exponent() >= 1;
  // Linear step below the normal range: 2^(1 + offset - 127 - y).
  const int step_exp = 1 + offset - 127 - fmt.y;
  double err = 0.0;
  double power = 0.0;
  for (int b = 1; b < 256; ++b) {
    const double c = static_cast<double>(h.counts[b]);
    if (c == 0.0) continue;
    const int e = b - 127;
    // Values spread evenly over [2^e, 2^(e+1)).
    const double binade_power = std::ldexp(7.0 / 3.0, 2 * e);
    power += c * binade_power;
    if (has_normals && b >= 1 + offset) {
      err += c * std::ldexp(1.0 / 12.0, 2 * (e - fmt.y));
    } else if (e + 1 <= step_exp - 1) {
      err += c * binade_power;  // whole binade flushes to zero
    } else {
      err += c * std::ldexp(1.0 / 12.0, 2 * step_exp);
    }
  }
  return power == 0.0 ? 0.0 : err / power;
}

Recommendation recommend_format(const ExponentHistogram& h, double flush_budget,
                                 std::span<const int> y_candidates) {
  if (!(flush_budget >= 0.0 && flush_budget < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "flush budget must be in [0, 1)");
  }
  if (h.finite() == 0) {
    throw Error(ErrorCode::kEmptyHistogram, "no finite elements");
  }
  const std::uint64_t nonzero = h.nonzero();
  Recommendation rec;
  rec.exponent_bits = -1;
  for (int x = 0; x <= 8; ++x) {
    const std::uint64_t lost = nonzero - covered_by_top(h, (1 << x) - 1);
    if (static_cast<double>(lost) <= flush_budget * static_cast<double>(nonzero)) {
      rec.exponent_bits = x;
      break;
    }
  }
  if (rec.exponent_bits < 0) {
    throw Error(ErrorCode::kBudgetUnsatisfiable, "no exponent width fits");
  }
  const int x = rec.exponent_bits;
  rec.coverage = top_k_coverage(h, (1 << x) - 1);

  auto add_ranked = [&](int ex, const BlockShape& hint) {
    std::vector<FormatCandidate> group;
    for (int y : y_candidates) {
      const FormatSpec fmt{ex, y};
      fmt.validate();
      group.push_back({fmt, hint, proxy_nmse(h, fmt)});
    }
    std::stable_sort(group.begin(), group.end(),
                     [](const FormatCandidate& a, const FormatCandidate& b) {
                       if (a.proxy_nmse != b.proxy_nmse) return a.proxy_nmse < b.proxy_nmse;
                       return a.fmt.bits() < b.fmt.bits();
                     });
    rec.ranked.insert(rec.ranked.end(), group.begin(), group.end());
  };
  add_ranked(x, BlockShape::tensor());
  rec.note = "exponent bits sized for one max-exponent per tensor";
  if (x >= 2) {
    // Per-row alternative, one exponent bit narrower.
    add_ranked(x - 1, BlockShape::row());
    rec.note += "; per-row metadata lowers the flushed fraction, so e" +
                std::to_string(x - 1) + "mY per row is listed as an alternative"
                " (its proxy score is the per-tensor upper bound)";
  }
  return rec;
}

double OutcomeCounts::fraction(Outcome o) const {
  const std::uint64_t n = finite();
  if (n == 0) return 0.0;
  std::uint64_t c = 0;
  switch (o) {
    case Outcome::kRounded: c = rounded; break;
    case Outcome::kSaturated: c = saturated; break;
    case Outcome::kSubnormal: c = subnormal; break;
    case Outcome::kFlushed: c = flushed; break;
    case Outcome::kSpecial: return 0.0;
  }
  return static_cast<double>(c) / static_cast<double>(n);
}

void OutcomeCounts::add(Outcome o) {
  switch (o) {
    case Outcome::kRounded: ++rounded; break;
    case Outcome::kSaturated: ++saturated; break;
    case Outcome::kSubnormal: ++subnormal; break;
    case Outcome::kFlushed: ++flushed; break;
    case Outcome::kSpecial: ++special; break;
  }
}

OutcomeCounts& OutcomeCounts::operator+=(const OutcomeCounts& other) {
  rounded += other.rounded;
  saturated += other.saturated;
  subnormal += other.subnormal;
  flushed += other.flushed;
  special += other.special;
  return *this;
}

FlushReport flush_report(const Tensor2f& t, const FormatSpec& fmt,
                         const BlockConfig& cfg) {
  std::vector<Outcome> outcomes;
  quantize_tensor(t, fmt, cfg, &outcomes);
  const auto regions = block_regions({t.rows(), t.cols()}, cfg.shape);
  FlushReport report;
  report.blocks.resize(regions.size());
  for (std::size_t k = 0; k < regions.size(); ++k) {
    const BlockRegion& b = regions[k];
    for (Index i = b.row; i < b.row + b.rows; ++i) {
      for (Index j = b.col; j < b.col + b.cols; ++j) {
        report.blocks[k].add(outcomes[static_cast<std::size_t>(i * t.cols() + j)]);
      }
    }
    report.total += report.blocks[k];
  }
  return report;
}

}  // namespace exmy
