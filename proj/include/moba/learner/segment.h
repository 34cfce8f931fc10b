#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "moba/features/observation.h"
#include "moba/net/network.h"

namespace moba::learner {

struct SegmentStep {
  features::Observation obs;
  std::array<int32_t, net::kNumHeads> labels{};
  // Behavior probability of each chosen label (kept binary32 on the wire).
  std::array<float, net::kNumHeads> behavior{};
  net::HeadMasks mask;
  float reward = 0;  // binary32 on the wire
  float value = 0;   // binary16 on the wire
  bool done = false;
};

// Fixed-length slice of one side's rollout. The last slice of an episode may
// be shorter and ends with done; otherwise `bootstrap_value` is V of the step
// after the slice.
struct TrajectorySegment {
  std::vector<SegmentStep> steps;
  std::vector<float> entry_h;
  std::vector<float> entry_c;
  float bootstrap_value = 0;
  uint64_t timestamp_us = 0;
  uint64_t model_version = 0;
  uint32_t actor_id = 0;
  uint64_t episode_id = 0;
  uint32_t side = 0;

  size_t size() const { return steps.size(); }
  bool ends_episode() const { return !steps.empty() && steps.back().done; }
  net::HiddenState entry_state() const;
};

}  // namespace moba::learner
