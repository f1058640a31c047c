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

#ifndef EXMY_ANALYSIS_HPP_
#define EXMY_ANALYSIS_HPP_

// Exponent-distribution analysis: fp32 biased-exponent histograms, the
// statistics derived from them, format recommendation from a flush budget,
// and per-block accounting of what quantization did to each element.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "exmy/block.hpp"
#include "exmy/format.hpp"
#include "exmy/tensor.hpp"

namespace exmy {

struct ExponentHistogram {
  // Bin 0 holds zeros and fp32 subnormals.
  std::array<std::uint64_t, 256> counts{};
  std::uint64_t total = 0;     // every element seen
  std::uint64_t specials = 0;  // NaN/Inf, not binned

  std::uint64_t finite() const { return total - specials; }
  std::uint64_t nonzero() const { return finite() - counts[0]; }

  // Partial histograms merge by addition.
  ExponentHistogram& operator+=(const ExponentHistogram& other);
};

ExponentHistogram histogram(std::span<const float> values);

template <typename Derived>
ExponentHistogram histogram(const Eigen::MatrixBase<Derived>& t) {
  const Tensor2f f = to_float(t);
  return histogram(std::span<const float>(f.data(), static_cast<std::size_t>(f.size())));
}

// Fraction of nonzero finite elements whose exponent lies in the k largest
// exponent values, counted down contiguously from the largest populated bin.
double top_k_coverage(const ExponentHistogram& h, int k);

// Fraction of finite elements with biased exponent in [0, threshold].
double flush_fraction(const ExponentHistogram& h, int threshold);

struct ExponentStats {
  int min_exponent = 0;  // smallest populated bin
  int max_exponent = 0;  // largest populated bin
  int peak_exponent = 0;
  int populated_bins = 0;
  int lossless_exponent_bits = 0;     // ceil(log2(populated_bins))
  std::vector<double> top_k_coverage;  // indexed by k, 0..255
  std::vector<double> flush_fraction;  // indexed by threshold, 0..255
};

// Throws ErrorCode::kEmptyHistogram when no finite element was seen.
ExponentStats stats(const ExponentHistogram& h);

struct FormatCandidate {
  FormatSpec fmt;
  BlockShape hint;
  // Expected squared error over signal power, modelled from the histogram
  // with one per-tensor metadatum.
  double proxy_nmse = 0.0;
};

struct Recommendation {
  int exponent_bits = 0;
  double coverage = 0.0;  // top_k_coverage at k = 2^exponent_bits - 1
  std::vector<FormatCandidate> ranked;
  std::string note;
};

// Smallest x whose top 2^x - 1 exponents keep at least 1 - flush_budget of
// the nonzero mass, with y drawn from y_candidates. Throws
// kInvalidArgument for a budget outside [0, 1) and kEmptyHistogram.
Recommendation recommend_format(const ExponentHistogram& h, double flush_budget,
                                 std::span<const int> y_candidates);

// Proxy used for ranking, exposed for tests.
double proxy_nmse(const ExponentHistogram& h, const FormatSpec& fmt);

struct OutcomeCounts {
  std::uint64_t rounded = 0;
  std::uint64_t saturated = 0;
  std::uint64_t subnormal = 0;
  std::uint64_t flushed = 0;
  std::uint64_t special = 0;

  std::uint64_t finite() const { return rounded + saturated + subnormal + flushed; }
  // Fraction of finite elements.
  double fraction(Outcome o) const;
  void add(Outcome o);
  OutcomeCounts& operator+=(const OutcomeCounts& other);
};

struct FlushReport {
  std::vector<OutcomeCounts> blocks;  // block scan order
  OutcomeCounts total;
};

// Same errors as emulate_tensor.
FlushReport flush_report(const Tensor2f& t, const FormatSpec& fmt,
                         const BlockConfig& cfg);

}  // namespace exmy

#endif  // EXMY_ANALYSIS_HPP_
