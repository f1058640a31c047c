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

#ifndef EXMY_CONTAINER_HPP_
#define EXMY_CONTAINER_HPP_

// EXMY checkpoint container. Little-endian throughout.
//
//   header   "EXMY" | version u8 = 1 | entry_count u32
//   entry    name_len u16 | name | rank u8 | dims u32 x rank
//            | x u8 | y u8 | scheme u8 | block_kind u8 [+ u32 params]
//            | flags u8
//            | (offset u64, length u64) for metadata, each segment
//              (descending width), scales, specials
//            | crc32 u32 over those sections in that order
//   payload  sections at the stated offsets, one tensor after another
//
// block params: subrow -> L; tile -> rows, cols; none otherwise.
// flags: bit0 scales present, bit1 specials present, bit2 bf16 scales,
//        bit3 format reserves Inf/NaN encodings.
// Sections: metadata is one u8 max biased exponent per block; scales one
// f32 per block; specials (u64 flat index, u32 fp32 bits) pairs.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exmy/codec.hpp"

namespace exmy {

inline constexpr std::uint8_t kContainerVersion = 1;

struct NamedTensor {
  std::string name;
  PackedTensor tensor;
};

struct Section {
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
};

struct ManifestEntry {
  std::string name;
  Dims dims;
  FormatSpec fmt;
  BlockConfig config;
  std::uint8_t flags = 0;
  Section metadata;
  std::vector<Section> segments;
  Section scales;
  Section specials;
  std::uint32_t crc = 0;

  std::uint64_t payload_bytes() const;
};

// Random-access byte input. Implementations must allow concurrent reads.
class ByteSource {
 public:
  virtual ~ByteSource() = default;
  virtual std::uint64_t size() const = 0;
  // Throws ErrorCode::kIoError on short reads.
  virtual void read_at(std::uint64_t offset, std::span<std::uint8_t> out) const = 0;
};

std::unique_ptr<ByteSource> open_file_source(const std::filesystem::path& path);
std::unique_ptr<ByteSource> memory_source(std::vector<std::uint8_t> bytes);

// Whole container in memory. Throws ErrorCode::kCorruptContainer for
// duplicate names or tensors that cannot be serialized.
std::vector<std::uint8_t> serialize(std::span<const NamedTensor> tensors);

// Written to a temporary next to path, then renamed into place. Returns the
// file size. Throws ErrorCode::kIoError.
std::uint64_t write_file(std::span<const NamedTensor> tensors,
                         const std::filesystem::path& path);

// Parses the manifest up front; tensor payloads are read on demand and touch
// only their own byte ranges.
class ContainerReader {
 public:
  // Throws kBadMagic, kUnsupportedVersion, kCorruptContainer.
  explicit ContainerReader(std::unique_ptr<ByteSource> source);

  const std::vector<ManifestEntry>& entries() const { return entries_; }
  std::uint64_t file_size() const { return source_->size(); }

  // Throws kChecksumMismatch, kCorruptContainer, kInvalidArgument (unknown
  // name).
  PackedTensor read(std::size_t index) const;
  PackedTensor read(std::string_view name) const;

 private:
  std::unique_ptr<ByteSource> source_;
  std::vector<ManifestEntry> entries_;
};

ContainerReader read_file(const std::filesystem::path& path);

}  // namespace exmy

#endif  // EXMY_CONTAINER_HPP_
