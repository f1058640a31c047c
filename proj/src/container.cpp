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

#include "exmy/container.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <set>
#include <system_error>

#include "exmy/error.hpp"

namespace exmy {
namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'E', 'X', 'M', 'Y'};

enum Flags : std::uint8_t {
  kScalesPresent = 1u << 0,
  kSpecialsPresent = 1u << 1,
  kBf16Scales = 1u << 2,
  kFormatSpecials = 1u << 3,
};

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void bytes(std::span<const std::uint8_t> b) {
    out_.insert(out_.end(), b.begin(), b.end());
  }
  void section(const Section& s) {
    u64(s.offset);
    u64(s.length);
  }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

// Sequential reader over a ByteSource, used for the manifest.
class Cursor {
 public:
  explicit Cursor(const ByteSource& src) : src_(src) {}

  std::uint64_t pos() const { return pos_; }
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  Section section() {
    Section s;
    s.offset = u64();
    s.length = u64();
    return s;
  }
  std::string string(std::size_t n) {
    std::string s(n, '\0');
    fetch(std::span(reinterpret_cast<std::uint8_t*>(s.data()), n));
    return s;
  }

 private:
  std::uint64_t le(int n) {
    std::array<std::uint8_t, 8> buf{};
    fetch(std::span(buf.data(), static_cast<std::size_t>(n)));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{buf[i]} << (8 * i);
    return v;
  }
  void fetch(std::span<std::uint8_t> out) {
    if (pos_ + out.size() > src_.size()) {
      throw Error(ErrorCode::kCorruptContainer, "manifest truncated");
    }
    src_.read_at(pos_, out);
    pos_ += out.size();
  }

  const ByteSource& src_;
  std::uint64_t pos_ = 0;
};

std::uint32_t load_u32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 |
         std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
}

std::uint64_t load_u64(const std::uint8_t* p) {
  return std::uint64_t{load_u32(p)} | std::uint64_t{load_u32(p + 4)} << 32;
}

struct Payload {
  std::vector<std::uint8_t> metadata;
  std::vector<std::vector<std::uint8_t>> segments;
  std::vector<std::uint8_t> scales;
  std::vector<std::uint8_t> specials;
};

Payload payload_of(const PackedTensor& pt) {
  Payload p;
  const bool scaled = pt.config.scheme == Scheme::kFloatScaling;
  ByteWriter scales;
  for (const BlockMetadata& m : pt.metadata) {
    p.metadata.push_back(m.max_biased_exponent);
    if (m.scale.has_value() != scaled) {
      throw Error(ErrorCode::kCorruptContainer,
                  "scale presence does not match scheme");
    }
    if (scaled) scales.u32(std::bit_cast<std::uint32_t>(*m.scale));
  }
  p.scales = std::move(scales.buffer());
  for (const Segment& s : pt.segments.segments) p.segments.push_back(s.bytes);
  ByteWriter specials;
  for (const SpecialValue& s : pt.specials) {
    specials.u64(s.index);
    specials.u32(s.bits);
  }
  p.specials = std::move(specials.buffer());
  return p;
}

// zlib treats a null buffer as a request for the seed and drops crc.
std::uint32_t crc_update(std::uint32_t crc, std::span<const std::uint8_t> b) {
  if (b.empty()) return crc;
  return static_cast<std::uint32_t>(
      ::crc32(crc, b.data(), static_cast<uInt>(b.size())));
}

void write_block_shape(ByteWriter& w, const BlockShape& bs) {
  w.u8(static_cast<std::uint8_t>(bs.kind));
  if (bs.kind == BlockShape::Kind::kSubRow) {
    w.u32(static_cast<std::uint32_t>(bs.length));
  } else if (bs.kind == BlockShape::Kind::kTile) {
    w.u32(static_cast<std::uint32_t>(bs.tile_rows));
    w.u32(static_cast<std::uint32_t>(bs.tile_cols));
  }
}

BlockShape read_block_shape(Cursor& c) {
  const std::uint8_t kind = c.u8();
  switch (kind) {
    case 0: return BlockShape::tensor();
    case 1: return BlockShape::row();
    case 2: return BlockShape::column();
    case 3: return BlockShape::sub_row(c.u32());
    case 4: {
      const Index r = c.u32();
      return BlockShape::tile(r, c.u32());
    }
    default:
      throw Error(ErrorCode::kCorruptContainer,
                  "unknown block kind " + std::to_string(kind));
  }
}

class FileSource final : public ByteSource {
 public:
  explicit FileSource(const std::filesystem::path& path)
      : fd_(::open(path.c_str(), O_RDONLY | O_CLOEXEC)) {
    if (fd_ < 0) {
      throw Error(ErrorCode::kIoError,
                  "cannot open " + path.string() + ": " + std::strerror(errno));
    }
    const off_t end = ::lseek(fd_, 0, SEEK_END);
    if (end < 0) {
      ::close(fd_);
      throw Error(ErrorCode::kIoError, "cannot size " + path.string());
    }
    size_ = static_cast<std::uint64_t>(end);
  }
  ~FileSource() override { ::close(fd_); }
  FileSource(const FileSource&) = delete;
  FileSource& operator=(const FileSource&) = delete;

  std::uint64_t size() const override { return size_; }

  void read_at(std::uint64_t offset, std::span<std::uint8_t> out) const override {
    std::size_t done = 0;
    while (done < out.size()) {
      const ssize_t n = ::pread(fd_, out.data() + done, out.size() - done,
                                static_cast<off_t>(offset + done));
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw Error(ErrorCode::kIoError, "short read");
      done += static_cast<std::size_t>(n);
    }
  }

 private:
  int fd_;
  std::uint64_t size_ = 0;
};

class MemorySource final : public ByteSource {
 public:
  explicit MemorySource(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}
  std::uint64_t size() const override { return bytes_.size(); }
  void read_at(std::uint64_t offset, std::span<std::uint8_t> out) const override {
    if (offset + out.size() > bytes_.size()) {
      throw Error(ErrorCode::kIoError, "read past end");
    }
    std::copy_n(bytes_.begin() + static_cast<std::ptrdiff_t>(offset), out.size(),
                out.begin());
  }

 private:
  std::vector<std::uint8_t> bytes_;
};

std::vector<std::uint8_t> read_section(const ByteSource& src, const Section& s) {
  std::vector<std::uint8_t> out(s.length);
  if (s.length > 0) src.read_at(s.offset, out);
  return out;
}

}  // namespace

std::uint64_t ManifestEntry::payload_bytes() const {
  std::uint64_t n = metadata.length + scales.length + specials.length;
  for (const Section& s : segments) n += s.length;
  return n;
}

std::unique_ptr<ByteSource> open_file_source(const std::filesystem::path& path) {
  return std::make_unique<FileSource>(path);
}

std::unique_ptr<ByteSource> memory_source(std::vector<std::uint8_t> bytes) {
  return std::make_unique<MemorySource>(std::move(bytes));
}

std::vector<std::uint8_t> serialize(std::span<const NamedTensor> tensors) {
  std::set<std::string_view> names;
  std::vector<Payload> payloads;
  for (const NamedTensor& nt : tensors) {
    if (!names.insert(nt.name).second) {
      throw Error(ErrorCode::kCorruptContainer, "duplicate tensor name '" + nt.name + "'");
    }
    if (nt.name.size() > 0xffff || nt.tensor.dims.size() > 0xff) {
      throw Error(ErrorCode::kCorruptContainer, "name or rank too large");
    }
    payloads.push_back(payload_of(nt.tensor));
  }

  // The manifest size does not depend on offset values, so lay it out once
  // with the final offsets computed from its length.
  auto manifest = [&](std::uint64_t payload_start) {
    ByteWriter w;
    w.bytes(kMagic);
    w.u8(kContainerVersion);
    w.u32(static_cast<std::uint32_t>(tensors.size()));
    std::uint64_t at = payload_start;
    auto next = [&](std::size_t len) {
      Section s{at, len};
      at += len;
      return s;
    };
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const PackedTensor& pt = tensors[i].tensor;
      const Payload& p = payloads[i];
      w.u16(static_cast<std::uint16_t>(tensors[i].name.size()));
      w.bytes(std::span(reinterpret_cast<const std::uint8_t*>(tensors[i].name.data()),
                        tensors[i].name.size()));
      w.u8(static_cast<std::uint8_t>(pt.dims.size()));
      for (auto d : pt.dims) w.u32(d);
      w.u8(static_cast<std::uint8_t>(pt.fmt.x));
      w.u8(static_cast<std::uint8_t>(pt.fmt.y));
      w.u8(static_cast<std::uint8_t>(pt.config.scheme));
      write_block_shape(w, pt.config.shape);
      std::uint8_t flags = 0;
      if (pt.config.scheme == Scheme::kFloatScaling) flags |= kScalesPresent;
      if (!pt.specials.empty()) flags |= kSpecialsPresent;
      if (pt.config.scale_type == ScaleType::kBfloat16) flags |= kBf16Scales;
      if (pt.fmt.supports_specials) flags |= kFormatSpecials;
      w.u8(flags);
      std::uint32_t crc = 0;
      w.section(next(p.metadata.size()));
      crc = crc_update(crc, p.metadata);
      for (const auto& seg : p.segments) {
        w.section(next(seg.size()));
        crc = crc_update(crc, seg);
      }
      w.section(next(p.scales.size()));
      crc = crc_update(crc, p.scales);
      w.section(next(p.specials.size()));
      crc = crc_update(crc, p.specials);
      w.u32(crc);
    }
    return std::move(w.buffer());
  };

  std::vector<std::uint8_t> out = manifest(0);
  out = manifest(out.size());
  for (const Payload& p : payloads) {
    out.insert(out.end(), p.metadata.begin(), p.metadata.end());
    for (const auto& seg : p.segments) out.insert(out.end(), seg.begin(), seg.end());
    out.insert(out.end(), p.scales.begin(), p.scales.end());
    out.insert(out.end(), p.specials.begin(), p.specials.end());
  }
  return out;
}

std::uint64_t write_file(std::span<const NamedTensor> tensors,
                         const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = serialize(tensors);
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorCode::kIoError,
                "cannot rename into " + path.string() + ": " + ec.message());
  }
  return bytes.size();
}

ContainerReader::ContainerReader(std::unique_ptr<ByteSource> source)
    : source_(std::move(source)) {
  const ByteSource& src = *source_;
  {
    std::array<std::uint8_t, 4> magic{};
    const auto avail = static_cast<std::size_t>(std::min<std::uint64_t>(src.size(), 4));
    src.read_at(0, std::span(magic.data(), avail));
    if (avail == 0 || !std::equal(magic.begin(), magic.begin() + avail, kMagic.begin())) {
      throw Error(ErrorCode::kBadMagic, "not an EXMY container");
    }
    if (avail < 4) throw Error(ErrorCode::kCorruptContainer, "file truncated");
  }
  Cursor c(src);
  c.string(4);
  const std::uint8_t version = c.u8();
  if (version != kContainerVersion) {
    throw Error(ErrorCode::kUnsupportedVersion,
                "container version " + std::to_string(version));
  }
  const std::uint32_t count = c.u32();
  std::set<std::string> names;
  for (std::uint32_t i = 0; i < count; ++i) {
    ManifestEntry e;
    e.name = c.string(c.u16());
    if (!names.insert(e.name).second) {
      throw Error(ErrorCode::kCorruptContainer, "duplicate tensor name '" + e.name + "'");
    }
    const std::uint8_t rank = c.u8();
    for (std::uint8_t r = 0; r < rank; ++r) e.dims.push_back(c.u32());
    e.fmt.x = c.u8();
    e.fmt.y = c.u8();
    const std::uint8_t scheme = c.u8();
    if (scheme > 2) {
      throw Error(ErrorCode::kCorruptContainer, "unknown scheme " + std::to_string(scheme));
    }
    e.config.scheme = static_cast<Scheme>(scheme);
    e.config.shape = read_block_shape(c);
    e.flags = c.u8();
    e.fmt.supports_specials = (e.flags & kFormatSpecials) != 0;
    e.config.scale_type =
        (e.flags & kBf16Scales) != 0 ? ScaleType::kBfloat16 : ScaleType::kFloat32;
    try {
      e.fmt.validate();
      if (e.fmt.bits() > 15) throw Error(ErrorCode::kUnsupportedWidth, e.fmt.name());
    } catch (const Error& err) {
      throw Error(ErrorCode::kCorruptContainer, err.what());
    }
    e.metadata = c.section();
    for (std::size_t s = 0; s < decompose(e.fmt.bits()).size(); ++s) {
      e.segments.push_back(c.section());
    }
    e.scales = c.section();
    e.specials = c.section();
    e.crc = c.u32();
    entries_.push_back(std::move(e));
  }

  // Every section must sit inside the payload area without overlap.
  const std::uint64_t header_end = c.pos();
  std::vector<Section> all;
  for (const ManifestEntry& e : entries_) {
    all.push_back(e.metadata);
    all.insert(all.end(), e.segments.begin(), e.segments.end());
    all.push_back(e.scales);
    all.push_back(e.specials);
  }
  std::sort(all.begin(), all.end(),
            [](const Section& a, const Section& b) { return a.offset < b.offset; });
  std::uint64_t cursor = header_end;
  for (const Section& s : all) {
    if (s.length == 0) continue;
    if (s.offset < cursor || s.length > src.size() || s.offset > src.size() - s.length) {
      throw Error(ErrorCode::kCorruptContainer, "section out of bounds or overlapping");
    }
    cursor = s.offset + s.length;
  }
}

PackedTensor ContainerReader::read(std::size_t index) const {
  if (index >= entries_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "no tensor #" + std::to_string(index));
  }
  const ManifestEntry& e = entries_[index];
  const ByteSource& src = *source_;
  auto corrupt = [&](const std::string& why) {
    return Error(ErrorCode::kCorruptContainer, e.name + ": " + why);
  };

  PackedTensor pt;
  pt.fmt = e.fmt;
  pt.config = e.config;
  pt.dims = e.dims;
  const Shape2D shape = view_2d(e.dims);
  std::size_t blocks = 0;
  try {
    blocks = block_regions(shape, e.config.shape).size();
  } catch (const Error& err) {
    throw corrupt(err.what());
  }
  if (shape.rows % 8 != 0) throw corrupt("rows not a multiple of 8");

  const bool scaled = e.config.scheme == Scheme::kFloatScaling;
  const Decomposition d = decompose(e.fmt.bits());
  const auto containers = static_cast<std::uint64_t>(shape.rows / 8) *
                          static_cast<std::uint64_t>(shape.cols);
  if (e.metadata.length != blocks) throw corrupt("metadata length");
  if (e.scales.length != (scaled ? 4 * blocks : 0)) throw corrupt("scale length");
  if (e.specials.length % 12 != 0) throw corrupt("specials length");
  if (((e.flags & kScalesPresent) != 0) != scaled) throw corrupt("scale flag");
  if (((e.flags & kSpecialsPresent) != 0) != (e.specials.length > 0)) {
    throw corrupt("specials flag");
  }
  for (std::size_t s = 0; s < d.size(); ++s) {
    if (e.segments[s].length != containers * static_cast<std::uint64_t>(d[s])) {
      throw corrupt("segment length");
    }
  }

  const std::vector<std::uint8_t> meta = read_section(src, e.metadata);
  std::uint32_t crc = crc_update(0, meta);
  pt.segments.k = e.fmt.bits();
  pt.segments.rows = shape.rows;
  pt.segments.cols = shape.cols;
  for (std::size_t s = 0; s < d.size(); ++s) {
    Segment seg{d[s], read_section(src, e.segments[s])};
    crc = crc_update(crc, seg.bytes);
    pt.segments.segments.push_back(std::move(seg));
  }
  const std::vector<std::uint8_t> scales = read_section(src, e.scales);
  crc = crc_update(crc, scales);
  const std::vector<std::uint8_t> specials = read_section(src, e.specials);
  crc = crc_update(crc, specials);
  if (crc != e.crc) {
    throw Error(ErrorCode::kChecksumMismatch, e.name + ": payload CRC mismatch");
  }

  for (std::size_t b = 0; b < blocks; ++b) {
    BlockMetadata m{meta[b], std::nullopt};
    if (scaled) m.scale = std::bit_cast<float>(load_u32(scales.data() + 4 * b));
    pt.metadata.push_back(m);
  }
  const std::uint64_t n = element_count(e.dims);
  for (std::size_t off = 0; off < specials.size(); off += 12) {
    SpecialValue s{load_u64(specials.data() + off), load_u32(specials.data() + off + 8)};
    if (s.index >= n) throw corrupt("special index out of range");
    pt.specials.push_back(s);
  }
  return pt;
}

PackedTensor ContainerReader::read(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return read(i);
  }
  throw Error(ErrorCode::kInvalidArgument, "no tensor named '" + std::string(name) + "'");
}

ContainerReader read_file(const std::filesystem::path& path) {
  return ContainerReader(open_file_source(path));
}

}  // namespace exmy
