#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "moba/common/rng.h"
#include "moba/learner/segment.h"

namespace moba::runtime {

struct PoolCounters {
  uint64_t pushed = 0;
  uint64_t evicted = 0;
  uint64_t sampled = 0;
  uint64_t rejected_frames = 0;
};

// Fixed-capacity circular queue of decoded segments, oldest evicted first.
class Pool {
 public:
  explicit Pool(size_t capacity);

  // Verifies and decodes a serialized SampleFrame. Returns the number of
  // segments appended, or -1 when the frame is rejected.
  int push_frame(std::span<const uint8_t> frame_bytes);
  void push(learner::TrajectorySegment segment);
  // Counts a frame dropped before it reached push_frame (e.g. a corrupted
  // wire message).
  void note_rejected() { ++counters_.rejected_frames; }

  struct Sample {
    std::vector<learner::TrajectorySegment> segments;
    bool shortfall = false;
  };
  // Draws without replacement with weight exp(-recency_bias * age_rank), age
  // rank 0 being the newest segment. `max_serial` > 0 restricts candidates to
  // segments among the first `max_serial` ever pushed.
  Sample sample(size_t n, double recency_bias, SplitMix64& rng, uint64_t max_serial = 0);
  // Indices into arrival order (serials) of the drawn segments, for tests.
  std::vector<uint64_t> sample_serials(size_t n, double recency_bias, SplitMix64& rng, uint64_t max_serial = 0);

  size_t size() const { return count_; }
  size_t capacity() const { return slots_.size(); }
  const PoolCounters& counters() const { return counters_; }
  // Arrival serial of the oldest and newest held segment.
  uint64_t oldest_serial() const { return counters_.pushed - count_; }

 private:
  const learner::TrajectorySegment& at_serial(uint64_t serial) const;

  std::vector<learner::TrajectorySegment> slots_;
  size_t count_ = 0;
  PoolCounters counters_;
};

}  // namespace moba::runtime
