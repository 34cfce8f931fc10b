#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "moba/learner/segment.h"

namespace moba::runtime {

// Segment body encoding (uncompressed). Observations, values, bootstrap and
// LSTM entry state are stored as binary16; behavior probabilities and rewards
// as binary32.
std::vector<uint8_t> encode_segments(std::span<const learner::TrajectorySegment> segments);
std::vector<learner::TrajectorySegment> decode_segments(std::span<const uint8_t> bytes);

// Applies exactly the rounding the wire applies, for comparisons.
learner::TrajectorySegment wire_rounded(const learner::TrajectorySegment& seg);

inline constexpr char kFrameMagic[4] = {'M', 'S', 'F', '1'};
inline constexpr uint16_t kFrameFormat = 1;
inline constexpr size_t kFrameHeaderBytes = 4 + 2 + 8 + 8 + 4 + 4 + 8;

struct SampleFrame {
  uint16_t format = kFrameFormat;
  uint64_t model_version = 0;
  uint64_t timestamp_us = 0;
  uint32_t uncompressed_length = 0;
  uint64_t checksum = 0;
  std::vector<uint8_t> payload;  // zlib stream

  // magic | u16 format | u64 model version | u64 timestamp | u32 payload len |
  // u32 uncompressed len | u64 checksum | payload, little-endian. The checksum
  // is FNV-1a-64 over every header byte before it plus the payload.
  std::vector<uint8_t> to_bytes() const;
  // Throws FormatError on bad magic, length or checksum.
  static SampleFrame from_bytes(std::span<const uint8_t> bytes);
};

// Packs segments into frames of at most `max_frame_bytes`, splitting the list
// as needed. Throws ContractError on an empty list or a single segment that
// alone exceeds the limit.
std::vector<SampleFrame> dispatch_pack(std::span<const learner::TrajectorySegment> segments,
                                       size_t max_frame_bytes = 16u << 20, int compression_level = 1);
// Decompresses and decodes; throws FormatError on any inconsistency.
std::vector<learner::TrajectorySegment> dispatch_unpack(const SampleFrame& frame);

uint64_t now_us();

}  // namespace moba::runtime
