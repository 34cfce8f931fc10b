#include "moba/runtime/frame.h"

#include <zlib.h>

#include <bit>
#include <chrono>
#include <cstring>

#include "moba/common/error.h"
#include "moba/common/fnv.h"
#include "moba/runtime/half.h"

namespace moba::runtime {

using learner::SegmentStep;
using learner::TrajectorySegment;

namespace {

class Writer {
 public:
  explicit Writer(std::vector<uint8_t>& out) : out_(out) {}
  template <typename T>
  void le(T v) {
    for (size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<uint8_t>(static_cast<uint64_t>(v) >> (8 * i)));
  }
  void f32(float v) { le<uint32_t>(std::bit_cast<uint32_t>(v)); }
  void f16(float v) { le<uint16_t>(float_to_half(v)); }
  void bytes(const uint8_t* p, size_t n) { out_.insert(out_.end(), p, p + n); }

 private:
  std::vector<uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> in) : in_(in) {}
  template <typename T>
  T le() {
    need(sizeof(T));
    uint64_t v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  float f32() { return std::bit_cast<float>(le<uint32_t>()); }
  float f16() { return half_to_float(le<uint16_t>()); }
  std::span<const uint8_t> bytes(size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(size_t n) const {
    if (pos_ + n > in_.size()) throw FormatError("segment payload truncated");
  }
  std::span<const uint8_t> in_;
  size_t pos_ = 0;
};

void check_fit(size_t v, size_t limit, const char* what) {
  if (v > limit) throw ContractError(std::string("segment field too large to encode: ") + what);
}

}  // namespace

std::vector<uint8_t> encode_segments(std::span<const TrajectorySegment> segments) {
  std::vector<uint8_t> out;
  Writer w(out);
  w.le<uint32_t>(static_cast<uint32_t>(segments.size()));
  for (const TrajectorySegment& seg : segments) {
    if (seg.entry_h.size() != seg.entry_c.size()) throw ContractError("entry h/c widths differ");
    w.le<uint64_t>(seg.model_version);
    w.le<uint64_t>(seg.timestamp_us);
    w.le<uint32_t>(seg.actor_id);
    w.le<uint64_t>(seg.episode_id);
    w.le<uint32_t>(seg.side);
    w.le<uint32_t>(static_cast<uint32_t>(seg.steps.size()));
    check_fit(seg.entry_h.size(), 0xffff, "hidden width");
    w.le<uint16_t>(static_cast<uint16_t>(seg.entry_h.size()));
    for (float v : seg.entry_h) w.f16(v);
    for (float v : seg.entry_c) w.f16(v);
    w.f16(seg.bootstrap_value);
    for (const SegmentStep& s : seg.steps) {
      const auto& o = s.obs;
      check_fit(o.num_units(), 0xffff, "unit count");
      check_fit(o.global.size(), 0xffff, "global width");
      w.le<uint16_t>(static_cast<uint16_t>(o.image_size));
      w.le<uint16_t>(static_cast<uint16_t>(o.unit_width));
      w.le<uint16_t>(static_cast<uint16_t>(o.num_units()));
      w.le<uint16_t>(static_cast<uint16_t>(o.global.size()));
      if (o.image.size() != static_cast<size_t>(features::Observation::kImageChannels) * o.image_size * o.image_size ||
          o.units.size() != o.num_units() * o.unit_width || o.unit_registry.size() != o.num_units())
        throw ContractError("observation tensor sizes are inconsistent");
      for (float v : o.image) w.f16(v);
      for (float v : o.units) w.f16(v);
      for (auto t : o.unit_types) w.le<uint8_t>(static_cast<uint8_t>(t));
      for (int id : o.unit_registry) w.le<int32_t>(id);
      for (float v : o.global) w.f16(v);
      for (int32_t l : s.labels) w.le<int32_t>(l);
      for (float b : s.behavior) w.f32(b);
      for (const auto& m : s.mask) {
        check_fit(m.size(), 0xffff, "mask width");
        w.le<uint16_t>(static_cast<uint16_t>(m.size()));
        w.bytes(m.data(), m.size());
      }
      w.f32(s.reward);
      w.f16(s.value);
      w.le<uint8_t>(s.done ? 1 : 0);
    }
  }
  return out;
}

std::vector<TrajectorySegment> decode_segments(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  uint32_t count = r.le<uint32_t>();
  std::vector<TrajectorySegment> out;
  for (uint32_t i = 0; i < count; ++i) {
    TrajectorySegment seg;
    seg.model_version = r.le<uint64_t>();
    seg.timestamp_us = r.le<uint64_t>();
    seg.actor_id = r.le<uint32_t>();
    seg.episode_id = r.le<uint64_t>();
    seg.side = r.le<uint32_t>();
    uint32_t steps = r.le<uint32_t>();
    uint16_t hw = r.le<uint16_t>();
    seg.entry_h.resize(hw);
    seg.entry_c.resize(hw);
    for (float& v : seg.entry_h) v = r.f16();
    for (float& v : seg.entry_c) v = r.f16();
    seg.bootstrap_value = r.f16();
    if (steps > bytes.size()) throw FormatError("implausible step count");
    seg.steps.resize(steps);
    for (SegmentStep& s : seg.steps) {
      auto& o = s.obs;
      o.image_size = r.le<uint16_t>();
      o.unit_width = r.le<uint16_t>();
      size_t units = r.le<uint16_t>();
      size_t global = r.le<uint16_t>();
      size_t image = static_cast<size_t>(features::Observation::kImageChannels) * o.image_size * o.image_size;
      if (image + units * o.unit_width > bytes.size()) throw FormatError("implausible observation size");
      o.image.resize(image);
      for (float& v : o.image) v = r.f16();
      o.units.resize(units * o.unit_width);
      for (float& v : o.units) v = r.f16();
      o.unit_types.resize(units);
      for (auto& t : o.unit_types) {
        uint8_t b = r.le<uint8_t>();
        if (b > 3) throw FormatError("bad unit type");
        t = static_cast<env::UnitType>(b);
      }
      o.unit_registry.resize(units);
      for (int& id : o.unit_registry) id = r.le<int32_t>();
      o.global.resize(global);
      for (float& v : o.global) v = r.f16();
      for (int32_t& l : s.labels) l = r.le<int32_t>();
      for (float& b : s.behavior) b = r.f32();
      for (auto& m : s.mask) {
        uint16_t n = r.le<uint16_t>();
        auto b = r.bytes(n);
        m.assign(b.begin(), b.end());
      }
      s.reward = r.f32();
      s.value = r.f16();
      s.done = r.le<uint8_t>() != 0;
    }
    out.push_back(std::move(seg));
  }
  if (!r.done()) throw FormatError("trailing bytes after segments");
  return out;
}

TrajectorySegment wire_rounded(const TrajectorySegment& seg) {
  TrajectorySegment s = seg;
  for (float& v : s.entry_h) v = round_to_half(v);
  for (float& v : s.entry_c) v = round_to_half(v);
  s.bootstrap_value = round_to_half(s.bootstrap_value);
  for (auto& st : s.steps) {
    for (float& v : st.obs.image) v = round_to_half(v);
    for (float& v : st.obs.units) v = round_to_half(v);
    for (float& v : st.obs.global) v = round_to_half(v);
    st.value = round_to_half(st.value);
  }
  return s;
}

namespace {

template <typename T>
void put(std::vector<uint8_t>& out, T v) {
  for (size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<uint8_t>(static_cast<uint64_t>(v) >> (8 * i)));
}

template <typename T>
T get(std::span<const uint8_t> in, size_t& pos) {
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<uint64_t>(in[pos + i]) << (8 * i);
  pos += sizeof(T);
  return static_cast<T>(v);
}

uint64_t frame_checksum(std::span<const uint8_t> header_prefix, std::span<const uint8_t> payload) {
  return fnv1a64(payload, fnv1a64(header_prefix));
}

}  // namespace

std::vector<uint8_t> SampleFrame::to_bytes() const {
  std::vector<uint8_t> out;
  out.reserve(kFrameHeaderBytes + payload.size());
  out.insert(out.end(), kFrameMagic, kFrameMagic + 4);
  put<uint16_t>(out, format);
  put<uint64_t>(out, model_version);
  put<uint64_t>(out, timestamp_us);
  put<uint32_t>(out, static_cast<uint32_t>(payload.size()));
  put<uint32_t>(out, uncompressed_length);
  put<uint64_t>(out, checksum);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

SampleFrame SampleFrame::from_bytes(std::span<const uint8_t> bytes) {
  if (bytes.size() < kFrameHeaderBytes || std::memcmp(bytes.data(), kFrameMagic, 4) != 0)
    throw FormatError("not a sample frame (bad magic)");
  SampleFrame f;
  size_t pos = 4;
  f.format = get<uint16_t>(bytes, pos);
  f.model_version = get<uint64_t>(bytes, pos);
  f.timestamp_us = get<uint64_t>(bytes, pos);
  uint32_t len = get<uint32_t>(bytes, pos);
  f.uncompressed_length = get<uint32_t>(bytes, pos);
  size_t checksum_at = pos;
  f.checksum = get<uint64_t>(bytes, pos);
  if (f.format != kFrameFormat) throw FormatError("unsupported frame format " + std::to_string(f.format));
  if (bytes.size() != kFrameHeaderBytes + len) throw FormatError("frame length does not match header");
  auto payload = bytes.subspan(kFrameHeaderBytes);
  if (frame_checksum(bytes.first(checksum_at), payload) != f.checksum) throw FormatError("frame checksum mismatch");
  f.payload.assign(payload.begin(), payload.end());
  return f;
}

namespace {

SampleFrame pack_one(std::span<const TrajectorySegment> segments, int level) {
  std::vector<uint8_t> raw = encode_segments(segments);
  if (raw.size() > 0xffffffffu) throw ContractError("frame body exceeds 4 GiB");
  uLongf cap = compressBound(raw.size());
  SampleFrame f;
  f.payload.resize(cap);
  if (compress2(f.payload.data(), &cap, raw.data(), raw.size(), level) != Z_OK)
    throw std::runtime_error("zlib compression failed");
  f.payload.resize(cap);
  f.uncompressed_length = static_cast<uint32_t>(raw.size());
  f.model_version = segments.front().model_version;
  f.timestamp_us = now_us();
  std::vector<uint8_t> prefix = f.to_bytes();
  prefix.resize(kFrameHeaderBytes - 8);
  f.checksum = frame_checksum(prefix, f.payload);
  return f;
}

void pack_into(std::span<const TrajectorySegment> segments, size_t max_bytes, int level,
               std::vector<SampleFrame>& out) {
  SampleFrame f = pack_one(segments, level);
  if (kFrameHeaderBytes + f.payload.size() <= max_bytes) {
    out.push_back(std::move(f));
    return;
  }
  if (segments.size() == 1) throw ContractError("a single segment exceeds the frame size limit");
  size_t half = segments.size() / 2;
  pack_into(segments.first(half), max_bytes, level, out);
  pack_into(segments.subspan(half), max_bytes, level, out);
}

}  // namespace

std::vector<SampleFrame> dispatch_pack(std::span<const TrajectorySegment> segments, size_t max_frame_bytes,
                                       int compression_level) {
  if (segments.empty()) throw ContractError("dispatch_pack: empty segment list");
  std::vector<SampleFrame> out;
  pack_into(segments, max_frame_bytes, compression_level, out);
  return out;
}

std::vector<TrajectorySegment> dispatch_unpack(const SampleFrame& frame) {
  std::vector<uint8_t> raw(frame.uncompressed_length);
  uLongf len = raw.size();
  int rc = uncompress(raw.data(), &len, frame.payload.data(), frame.payload.size());
  if (rc != Z_OK || len != raw.size()) throw FormatError("frame payload does not decompress to its declared length");
  return decode_segments(raw);
}

uint64_t now_us() {
  return static_cast<uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::system_clock::now().time_since_epoch()).count());
}

}  // namespace moba::runtime
