#include "moba/runtime/pool.h"

#include <algorithm>

#include "moba/common/error.h"
#include "moba/runtime/frame.h"

namespace moba::runtime {

Pool::Pool(size_t capacity) : slots_(capacity) {
  if (capacity == 0) throw ConfigError("pool.capacity", "must be >= 1");
}

int Pool::push_frame(std::span<const uint8_t> bytes) {
  std::vector<learner::TrajectorySegment> segs;
  try {
    segs = dispatch_unpack(SampleFrame::from_bytes(bytes));
  } catch (const FormatError&) {
    ++counters_.rejected_frames;
    return -1;
  }
  for (auto& s : segs) push(std::move(s));
  return static_cast<int>(segs.size());
}

void Pool::push(learner::TrajectorySegment segment) {
  slots_[counters_.pushed % slots_.size()] = std::move(segment);
  ++counters_.pushed;
  if (count_ < slots_.size()) ++count_;
  else ++counters_.evicted;
}

const learner::TrajectorySegment& Pool::at_serial(uint64_t serial) const { return slots_[serial % slots_.size()]; }

std::vector<uint64_t> Pool::sample_serials(size_t n, double recency_bias, SplitMix64& rng, uint64_t max_serial) {
  if (count_ == 0) throw ContractError("pool_sample on an empty pool");
  if (recency_bias < 0) throw ContractError("recency_bias must be >= 0");
  uint64_t lo = oldest_serial(), hi = counters_.pushed;
  if (max_serial > 0) hi = std::min(hi, std::max(lo, max_serial));
  // Gumbel top-k: keys log w + G give a draw without replacement with
  // probabilities proportional to w.
  std::vector<std::pair<double, uint64_t>> keys;
  keys.reserve(hi - lo);
  for (uint64_t s = lo; s < hi; ++s) {
    double age_rank = static_cast<double>(counters_.pushed - 1 - s);
    keys.emplace_back(-recency_bias * age_rank + rng.gumbel(), s);
  }
  size_t take = std::min(n, keys.size());
  std::partial_sort(keys.begin(), keys.begin() + take, keys.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second > b.second); });
  std::vector<uint64_t> out;
  out.reserve(take);
  for (size_t i = 0; i < take; ++i) out.push_back(keys[i].second);
  counters_.sampled += take;
  return out;
}

Pool::Sample Pool::sample(size_t n, double recency_bias, SplitMix64& rng, uint64_t max_serial) {
  Sample out;
  for (uint64_t s : sample_serials(n, recency_bias, rng, max_serial)) out.segments.push_back(at_serial(s));
  out.shortfall = out.segments.size() < n;
  return out;
}

}  // namespace moba::runtime
