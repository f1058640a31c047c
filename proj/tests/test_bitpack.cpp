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

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "exmy/bitpack.hpp"
#include "exmy/error.hpp"
#include "oracles.hpp"

namespace {

using exmy::CodeMatrix;
using exmy::ErrorCode;
using exmy::PackedSegments;

template <typename F>
std::optional<ErrorCode> code_of(F&& f) {
  try {
    f();
  } catch (const exmy::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

CodeMatrix random_codes(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, int k) {
  CodeMatrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<std::uint32_t>(rng() & ((1u << k) - 1u));
  }
  return m;
}

TEST(Decompose, SetBitsDescending) {
  EXPECT_EQ(exmy::decompose(7), (std::vector<int>{4, 2, 1}));
  EXPECT_EQ(exmy::decompose(5), (std::vector<int>{4, 1}));
  EXPECT_EQ(exmy::decompose(8), (std::vector<int>{8}));
  EXPECT_EQ(exmy::decompose(10), (std::vector<int>{8, 2}));
  EXPECT_EQ(exmy::decompose(15), (std::vector<int>{8, 4, 2, 1}));
  EXPECT_EQ(code_of([] { exmy::decompose(0); }), ErrorCode::kUnsupportedWidth);
  EXPECT_EQ(code_of([] { exmy::decompose(16); }), ErrorCode::kUnsupportedWidth);
}

TEST(Pack, ThreeBitExample) {
  const std::vector<std::uint32_t> codes{0, 1, 2, 3, 4, 5, 6, 7};
  const PackedSegments ps = exmy::pack(codes, 3);
  ASSERT_EQ(ps.segments.size(), 2u);
  EXPECT_EQ(exmy::segment_matrix<std::uint16_t>(ps, 0)(0, 0), 0xFA50);
  EXPECT_EQ(exmy::segment_matrix<std::uint8_t>(ps, 1)(0, 0), 0xAA);
  EXPECT_EQ(ps.segments[0].bytes, (std::vector<std::uint8_t>{0x50, 0xFA}));
  EXPECT_EQ(exmy::unpack(ps, 3, 8), codes);
}

TEST(Pack, SevenBitsUseFiftySixBits) {
  const std::vector<std::uint32_t> codes(8, 0x55);
  const PackedSegments ps = exmy::pack(codes, 7);
  EXPECT_EQ(ps.payload_bits(), 56u);
  EXPECT_EQ(ps.segments[0].bytes.size(), 4u);
  EXPECT_EQ(ps.segments[1].bytes.size(), 2u);
  EXPECT_EQ(ps.segments[2].bytes.size(), 1u);
}

TEST(Pack, ZerosStayZero) {
  for (int k = 1; k <= 15; ++k) {
    const PackedSegments ps = exmy::pack(std::vector<std::uint32_t>(64, 0), k);
    for (const auto& s : ps.segments) {
      for (auto b : s.bytes) ASSERT_EQ(b, 0);
    }
  }
}

TEST(Pack, MatchesBitAssemblyOracle) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 500; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 15);
    const CodeMatrix codes = random_codes(rng, 8 * (1 + rng() % 4), 1 + rng() % 7, k);
    const PackedSegments ps = exmy::pack_rows(codes, k);
    const auto want = oracle::pack_planes(codes, k);
    ASSERT_EQ(ps.segments.size(), want.size());
    for (std::size_t s = 0; s < want.size(); ++s) ASSERT_EQ(ps.segments[s].bytes, want[s]) << k;
  }
}

TEST(Pack, PerfectCompression) {
  for (int k = 1; k <= 15; ++k) {
    for (std::size_t n : {8u, 64u, 4096u, 8000u}) {
      const PackedSegments ps = exmy::pack(std::vector<std::uint32_t>(n, 1), k);
      ASSERT_EQ(ps.payload_bits(), n * static_cast<std::uint64_t>(k));
    }
  }
}

TEST(Pack, RoundTripRandom) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 2000; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 15);
    const std::size_t n = 8 * (1 + rng() % 64);
    std::vector<std::uint32_t> codes(n);
    for (auto& c : codes) c = static_cast<std::uint32_t>(rng() & ((1u << k) - 1u));
    const PackedSegments ps = exmy::pack(codes, k);
    ASSERT_EQ(exmy::unpack(ps, k, n), codes);
    ASSERT_EQ(exmy::pack(exmy::unpack(ps, k, n), k), ps);
  }
}

TEST(Pack, ExhaustiveSweep) {
  for (int k = 1; k <= 12; ++k) {
    const std::uint32_t count = 1u << k;
    std::vector<std::uint32_t> codes;
    // Every code in every lane position.
    for (std::uint32_t rep = 0; rep < 8; ++rep) {
      for (std::uint32_t c = 0; c < count; ++c) codes.push_back((c + rep) & (count - 1));
    }
    ASSERT_EQ(exmy::unpack(exmy::pack(codes, k), k, codes.size()), codes) << k;
  }
}

TEST(Pack, RowShapes) {
  std::mt19937_64 rng(47);
  const PackedSegments a = exmy::pack_rows(random_codes(rng, 8, 3, 7), 7);
  ASSERT_EQ(a.segments.size(), 3u);
  EXPECT_EQ(exmy::segment_matrix<std::uint32_t>(a, 0).rows(), 1);
  EXPECT_EQ(exmy::segment_matrix<std::uint32_t>(a, 0).cols(), 3);
  EXPECT_EQ(exmy::segment_matrix<std::uint16_t>(a, 1).cols(), 3);
  EXPECT_EQ(exmy::segment_matrix<std::uint8_t>(a, 2).cols(), 3);
  const PackedSegments b = exmy::pack_rows(random_codes(rng, 16, 1, 5), 5);
  ASSERT_EQ(b.segments.size(), 2u);
  EXPECT_EQ(exmy::segment_matrix<std::uint32_t>(b, 0).rows(), 2);
  EXPECT_EQ(exmy::segment_matrix<std::uint8_t>(b, 1).rows(), 2);
  const PackedSegments c = exmy::pack_rows(random_codes(rng, 8, 2, 8), 8);
  EXPECT_EQ(exmy::segment_matrix<std::uint64_t>(c, 0).cols(), 2);
  EXPECT_EQ(code_of([&] { exmy::segment_matrix<std::uint8_t>(c, 0); }), ErrorCode::kSizeMismatch);
}

TEST(Pack, Errors) {
  EXPECT_EQ(code_of([] { exmy::pack(std::vector<std::uint32_t>(7, 0), 3); }),
            ErrorCode::kLengthNotMultipleOf8);
  EXPECT_EQ(code_of([] { exmy::pack(std::vector<std::uint32_t>(8, 8), 3); }),
            ErrorCode::kCodeOutOfRange);
  EXPECT_EQ(code_of([] { exmy::pack_rows(CodeMatrix::Zero(12, 2), 3); }),
            ErrorCode::kRowsNotMultipleOf8);
  EXPECT_EQ(code_of([] { exmy::pack(std::vector<std::uint32_t>(8, 0), 16); }),
            ErrorCode::kUnsupportedWidth);
  const PackedSegments ps = exmy::pack(std::vector<std::uint32_t>(16, 1), 3);
  EXPECT_EQ(code_of([&] { exmy::unpack(ps, 4, 16); }), ErrorCode::kSizeMismatch);
  EXPECT_EQ(code_of([&] { exmy::unpack(ps, 3, 8); }), ErrorCode::kSizeMismatch);
  PackedSegments broken = ps;
  broken.segments[0].bytes.pop_back();
  EXPECT_EQ(code_of([&] { exmy::unpack_rows(broken); }), ErrorCode::kSizeMismatch);
}

TEST(Pack, Columns) {
  std::mt19937_64 rng(59);
  const CodeMatrix codes = random_codes(rng, 5, 24, 6);
  const PackedSegments ps = exmy::pack_cols(codes, 6);
  EXPECT_EQ(ps.rows, 24);
  EXPECT_EQ(ps.cols, 5);
  EXPECT_EQ(exmy::unpack_cols(ps), codes);
}

TEST(Shard, FullSingleColumnAndRowGroups) {
  std::mt19937_64 rng(61);
  const CodeMatrix codes = random_codes(rng, 32, 6, 7);
  const PackedSegments ps = exmy::pack_rows(codes, 7);
  EXPECT_EQ(exmy::shard_view(ps, 0, 32, 0, 6), ps);
  EXPECT_EQ(exmy::unpack_rows(exmy::shard_view(ps, 0, 32, 2, 3)), CodeMatrix(codes.col(2)));
  EXPECT_EQ(exmy::unpack_rows(exmy::shard_view(ps, 8, 24, 0, 6)), CodeMatrix(codes.middleRows(8, 16)));
  EXPECT_EQ(code_of([&] { exmy::shard_view(ps, 4, 16, 0, 6); }), ErrorCode::kUnalignedShard);
  EXPECT_EQ(code_of([&] { exmy::shard_view(ps, 0, 40, 0, 6); }), ErrorCode::kUnalignedShard);
  EXPECT_EQ(code_of([&] { exmy::shard_view(ps, 0, 8, 4, 7); }), ErrorCode::kUnalignedShard);
}

TEST(Shard, CommutesWithSlicing) {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 500; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 15);
    const Eigen::Index groups = 1 + static_cast<Eigen::Index>(rng() % 6);
    const Eigen::Index cols = 1 + static_cast<Eigen::Index>(rng() % 9);
    const CodeMatrix codes = random_codes(rng, 8 * groups, cols, k);
    const Eigen::Index g0 = static_cast<Eigen::Index>(rng() % groups);
    const Eigen::Index g1 = g0 + 1 + static_cast<Eigen::Index>(rng() % (groups - g0));
    const Eigen::Index c0 = static_cast<Eigen::Index>(rng() % cols);
    const Eigen::Index c1 = c0 + 1 + static_cast<Eigen::Index>(rng() % (cols - c0));
    const PackedSegments shard = exmy::shard_view(exmy::pack_rows(codes, k), 8 * g0, 8 * g1, c0, c1);
    ASSERT_EQ(exmy::unpack_rows(shard), CodeMatrix(codes.block(8 * g0, c0, 8 * (g1 - g0), c1 - c0)));
    // Slicing before packing gives the same bytes.
    ASSERT_EQ(shard, exmy::pack_rows(codes.block(8 * g0, c0, 8 * (g1 - g0), c1 - c0), k));
  }
}

TEST(Pack, Deterministic) {
  std::mt19937_64 rng(71);
  const CodeMatrix codes = random_codes(rng, 64, 32, 6);
  EXPECT_EQ(exmy::pack_rows(codes, 6), exmy::pack_rows(codes, 6));
  // Column 0 holds 0, 10, 20, 30, 40, 50, 60, 6: high nibbles
  // 0x1FCA7520, low pairs 0x8888.
  CodeMatrix ramp(8, 2);
  for (Eigen::Index i = 0; i < ramp.size(); ++i) ramp.data()[i] = static_cast<std::uint32_t>(i * 5 % 64);
  const PackedSegments ps = exmy::pack_rows(ramp, 6);
  EXPECT_EQ(ps.segments[0].bytes,
            (std::vector<std::uint8_t>{0x20, 0x75, 0xCA, 0x1F, 0x31, 0x86, 0xDB, 0x20}));
  EXPECT_EQ(ps.segments[1].bytes, (std::vector<std::uint8_t>{0x88, 0x88, 0xDD, 0xDD}));
}

}  // namespace
