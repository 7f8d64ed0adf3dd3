/** Copyright 2026 The trajsearch Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * 	http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <zlib.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "trajsearch/svti.h"

namespace trajsearch {

namespace {

constexpr std::array<char, 4> kIndexMagic = {'S', 'V', 'T', 'I'};
constexpr std::array<char, 4> kStoreMagic = {'S', 'V', 'T', 'S'};
constexpr std::size_t kHeaderSize = 4 + 2 + 8;

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const void* p, std::size_t n) {
    auto b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  std::vector<std::uint8_t>& buffer() { return buf_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size)
      : data_(data), size_(size) {}

  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::size_t remaining() const { return size_ - pos_; }

 private:
  std::uint64_t get(int n) {
    if (remaining() < static_cast<std::size_t>(n)) {
      throw LoadError(LoadError::Kind::kFormat,
                      "payload ends inside a record");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
    pos_ += n;
    return v;
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

struct Header {
  std::uint32_t node_capacity = 0;
  SegmentationConfig seg;
};

std::vector<std::uint8_t> encode_payload(const TrajectoryStore& store,
                                         const Header& h,
                                         bool with_segments) {
  ByteWriter w;
  w.u32(h.node_capacity);
  w.u32(static_cast<std::uint32_t>(h.seg.l_min));
  w.u32(static_cast<std::uint32_t>(h.seg.l_max));
  w.f64(store.projection().ref_lon);
  w.f64(store.projection().ref_lat);
  w.f64(store.projection().earth_radius);
  w.u64(store.size());
  for (const auto& t : store.trajectories()) {
    w.u64(t.id());
    w.u64(t.size());
    for (const auto& p : t.points()) {
      w.f64(p.x);
      w.f64(p.y);
    }
    const auto bounds = with_segments ? t.segment_bounds()
                                      : std::span<const SegmentBounds>{};
    w.u64(bounds.size());
    for (const auto& b : bounds) {
      w.u32(static_cast<std::uint32_t>(b.start));
      w.u32(static_cast<std::uint32_t>(b.end));
    }
  }
  return std::move(w.buffer());
}

std::vector<std::uint8_t> wrap(const std::array<char, 4>& magic,
                               const std::vector<std::uint8_t>& payload) {
  ByteWriter w;
  w.bytes(magic.data(), magic.size());
  w.u16(kFileFormatVersion);
  w.u64(payload.size());
  w.bytes(payload.data(), payload.size());
  w.u32(static_cast<std::uint32_t>(
      crc32(0L, payload.data(), static_cast<uInt>(payload.size()))));
  return std::move(w.buffer());
}

void write_file(const std::filesystem::path& path,
                const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Validates the container and returns the payload span.
std::span<const std::uint8_t> unwrap(const std::vector<std::uint8_t>& bytes,
                                     const std::array<char, 4>& magic) {
  using K = LoadError::Kind;
  if (bytes.size() < magic.size()) {
    throw LoadError(K::kFormat, "file too short to hold a header");
  }
  if (std::memcmp(bytes.data(), magic.data(), magic.size()) != 0) {
    throw LoadError(K::kVersion, "unrecognized magic bytes");
  }
  if (bytes.size() < kHeaderSize) {
    throw LoadError(K::kTruncated, "file truncated inside the header");
  }
  ByteReader header(bytes.data() + 4, kHeaderSize - 4);
  const std::uint16_t version = header.u16();
  if (version != kFileFormatVersion) {
    throw LoadError(K::kVersion, "unsupported format version " +
                                     std::to_string(version));
  }
  const std::uint64_t len = header.u64();
  if (bytes.size() - kHeaderSize < len + 4) {
    throw LoadError(K::kTruncated, "file truncated: payload incomplete");
  }
  if (bytes.size() - kHeaderSize > len + 4) {
    throw LoadError(K::kFormat, "trailing bytes after checksum");
  }
  std::span<const std::uint8_t> payload(bytes.data() + kHeaderSize, len);
  ByteReader tail(bytes.data() + kHeaderSize + len, 4);
  const std::uint32_t stored = tail.u32();
  const auto actual = static_cast<std::uint32_t>(
      crc32(0L, payload.data(), static_cast<uInt>(payload.size())));
  if (stored != actual) throw LoadError(K::kChecksum, "payload checksum mismatch");
  return payload;
}

TrajectoryStore decode_payload(std::span<const std::uint8_t> payload,
                               Header& h) {
  ByteReader r(payload.data(), payload.size());
  h.node_capacity = r.u32();
  h.seg.l_min = r.u32();
  h.seg.l_max = r.u32();
  ProjectionRef proj;
  proj.ref_lon = r.f64();
  proj.ref_lat = r.f64();
  proj.earth_radius = r.f64();
  TrajectoryStore store(proj);
  const std::uint64_t count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    const TrajId id = r.u64();
    const std::uint64_t n = r.u64();
    if (n > r.remaining() / 16) {
      throw LoadError(LoadError::Kind::kFormat, "point count exceeds payload");
    }
    std::vector<PlanarPoint> pts(n);
    for (auto& p : pts) {
      p.x = r.f64();
      p.y = r.f64();
    }
    const std::uint64_t segs = r.u64();
    if (segs > r.remaining() / 8) {
      throw LoadError(LoadError::Kind::kFormat, "segment count exceeds payload");
    }
    std::vector<SegmentBounds> bounds(segs);
    for (auto& b : bounds) {
      b.start = r.u32();
      b.end = r.u32();
    }
    try {
      Trajectory t(id, std::move(pts));
      if (!bounds.empty()) t.set_segments(std::move(bounds));
      store.add(std::move(t));
    } catch (const std::invalid_argument& e) {
      throw LoadError(LoadError::Kind::kFormat, e.what());
    }
  }
  if (r.remaining() != 0) {
    throw LoadError(LoadError::Kind::kFormat, "unexpected bytes after records");
  }
  return store;
}

}  // namespace

std::vector<std::uint8_t> serialize_store(const TrajectoryStore& store) {
  return wrap(kStoreMagic, encode_payload(store, Header{}, false));
}

void save_store(const TrajectoryStore& store,
                const std::filesystem::path& path) {
  write_file(path, serialize_store(store));
}

TrajectoryStore load_store(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  Header h;
  return decode_payload(unwrap(bytes, kStoreMagic), h);
}

void save_index(const SvtiIndex& index, const std::filesystem::path& path) {
  Header h;
  h.node_capacity = static_cast<std::uint32_t>(index.node_capacity());
  h.seg = index.segmentation();
  write_file(path, wrap(kIndexMagic, encode_payload(index.store(), h, true)));
}

SvtiIndex load_index(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  Header h;
  TrajectoryStore store = decode_payload(unwrap(bytes, kIndexMagic), h);
  for (const auto& t : store.trajectories()) {
    if (!t.segmented()) {
      throw LoadError(LoadError::Kind::kFormat,
                      "index file holds an unsegmented trajectory");
    }
  }
  if (h.node_capacity < 2) {
    throw LoadError(LoadError::Kind::kFormat, "invalid node capacity");
  }

  SvtiIndex index(std::make_shared<const TrajectoryStore>(std::move(store)),
                  h.node_capacity);
  index.seg_cfg_ = h.seg;
  std::vector<SegmentRef> all;
  for (const auto& t : index.store_->trajectories()) {
    index.present_[t.id()].assign(t.segment_count(), true);
    for (SegIndex u = 1; u <= t.segment_count(); ++u) all.push_back(t.segment(u));
  }
  index.entries_ = all.size();
  index.nodes_.clear();
  index.root_ = index.bulk_load(std::move(all));
  return index;
}

}  // namespace trajsearch
